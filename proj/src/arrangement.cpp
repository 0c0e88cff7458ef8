#include "qie/arrangement.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qie {

namespace {

std::string basis_key(const RatMat& basis) {
  std::ostringstream os;
  for (const auto& row : basis) {
    for (const auto& x : row) os << format_rational(x) << ',';
    os << ';';
  }
  return os.str();
}

/// Sorts hyperplanes (keeping aligned roots) and rejects duplicates.
void finish_hyperplanes(Arrangement& arr) {
  std::vector<std::size_t> order(arr.hyperplanes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return int_vec_less(arr.hyperplanes[a].normal, arr.hyperplanes[b].normal);
  });
  std::vector<Hyperplane> hs;
  std::vector<std::vector<Int>> rs;
  hs.reserve(order.size());
  for (std::size_t idx : order) {
    if (!hs.empty() && hs.back().normal == arr.hyperplanes[idx].normal)
      throw std::logic_error("duplicate hyperplane in pattern construction");
    hs.push_back(std::move(arr.hyperplanes[idx]));
    if (!arr.roots.empty()) rs.push_back(std::move(arr.roots[idx]));
  }
  arr.hyperplanes = std::move(hs);
  arr.roots = std::move(rs);
}

/// Coordinate normal of the hyperplane cut out by the covector r in R^N.
std::vector<Int> coordinate_normal(const RatMat& realization, const RatVec& r) {
  RatVec u(realization.size());
  for (std::size_t k = 0; k < realization.size(); ++k) u[k] = rat_dot(realization[k], r);
  return primitive_integer(u);
}

void push_root(Arrangement& arr, const RatVec& root) {
  arr.hyperplanes.push_back({coordinate_normal(arr.realization, root)});
  arr.roots.push_back(primitive_integer(root));
}

RatVec unit(std::size_t n, std::size_t i, const Rational& c = 1) {
  RatVec v(n, 0);
  v[i] = c;
  return v;
}

Arrangement build_type_a(std::size_t n) {
  Arrangement arr;
  arr.dim = n;
  arr.real_dim = n + 1;
  arr.realization = rat_zeros(n, n + 1);
  for (std::size_t k = 0; k < n; ++k) {
    arr.realization[k][k] = 1;
    arr.realization[k][k + 1] = -1;
  }
  for (std::size_t i = 0; i < n + 1; ++i)
    for (std::size_t j = i + 1; j < n + 1; ++j) {
      RatVec r(n + 1, 0);
      r[i] = 1;
      r[j] = -1;
      push_root(arr, r);
    }
  arr.factors = {{"A", n, 0}};
  return arr;
}

Arrangement build_type_bc(std::size_t n) {
  Arrangement arr;
  arr.dim = n;
  arr.real_dim = n;
  arr.realization = rat_identity(n);
  for (std::size_t i = 0; i < n; ++i) push_root(arr, unit(n, i));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (int s : {-1, 1}) {
        RatVec r = unit(n, i);
        r[j] = s;
        push_root(arr, r);
      }
  arr.factors = {{"BC", n, 0}};
  return arr;
}

void push_sign_pairs(Arrangement& arr, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (int s : {-1, 1}) {
        RatVec r = unit(n, i);
        r[j] = s;
        push_root(arr, r);
      }
}

Arrangement build_type_d(std::size_t n) {
  Arrangement arr;
  arr.dim = n;
  arr.real_dim = n;
  arr.realization = rat_identity(n);
  push_sign_pairs(arr, n);
  arr.factors = {{"D", n, 0}};
  return arr;
}

Arrangement build_type_g2() {
  Arrangement arr;
  arr.dim = 2;
  arr.real_dim = 3;
  // Basis of the sum-zero plane in R^3.
  arr.realization = {{1, -1, 0}, {0, 1, -1}};
  const RatMat roots = {{1, -1, 0}, {1, 0, -1}, {0, 1, -1},
                        {2, -1, -1}, {-1, 2, -1}, {-1, -1, 2}};
  for (const auto& r : roots) push_root(arr, r);
  arr.factors = {{"G2", 2, 0}};
  return arr;
}

Arrangement build_type_f4() {
  Arrangement arr;
  arr.dim = 4;
  arr.real_dim = 4;
  arr.realization = rat_identity(4);
  for (std::size_t i = 0; i < 4; ++i) push_root(arr, unit(4, i));
  push_sign_pairs(arr, 4);
  for (int s2 : {-1, 1})
    for (int s3 : {-1, 1})
      for (int s4 : {-1, 1}) push_root(arr, {1, s2, s3, s4});
  arr.factors = {{"F4", 4, 0}};
  return arr;
}

/// E8 root lines in R^8: e_i +- e_j together with the even-sign half vectors
/// (stored doubled, one representative per line).
std::vector<RatVec> e8_root_lines() {
  std::vector<RatVec> roots;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = i + 1; j < 8; ++j)
      for (int s : {-1, 1}) {
        RatVec r(8, 0);
        r[i] = 1;
        r[j] = s;
        roots.push_back(r);
      }
  for (int mask = 0; mask < 128; ++mask) {
    RatVec r(8, 1);
    int minus = 0;
    for (int b = 0; b < 7; ++b)
      if (mask & (1 << b)) {
        r[static_cast<std::size_t>(b) + 1] = -1;
        ++minus;
      }
    if (minus % 2 == 0) roots.push_back(r);
  }
  return roots;
}

Arrangement build_type_e(std::size_t rank) {
  Arrangement arr;
  arr.dim = rank;
  arr.real_dim = 8;
  if (rank == 8) {
    arr.realization = rat_identity(8);
  } else if (rank == 7) {
    // Basis of the span of the roots orthogonal to e7+e8.
    arr.realization = rat_zeros(7, 8);
    for (std::size_t k = 0; k < 6; ++k) arr.realization[k][k] = 1;
    arr.realization[6][6] = 1;
    arr.realization[6][7] = -1;
  } else {
    // Rank 6: roots orthogonal to e7+e8 and e6+e7.
    arr.realization = rat_zeros(6, 8);
    for (std::size_t k = 0; k < 5; ++k) arr.realization[k][k] = 1;
    arr.realization[5][5] = 1;
    arr.realization[5][6] = -1;
    arr.realization[5][7] = 1;
  }
  const RatVec c1 = {0, 0, 0, 0, 0, 0, 1, 1};  // e7+e8
  const RatVec c2 = {0, 0, 0, 0, 0, 1, 1, 0};  // e6+e7
  for (const auto& r : e8_root_lines()) {
    if (rank <= 7 && rat_dot(r, c1) != 0) continue;
    if (rank == 6 && rat_dot(r, c2) != 0) continue;
    push_root(arr, r);
  }
  arr.factors = {{"E" + std::to_string(rank), rank, 0}};
  return arr;
}

std::vector<RatVec> simple_roots(const std::string& type, std::size_t rank) {
  std::vector<RatVec> s;
  auto chain = [&](std::size_t count, std::size_t n) {
    for (std::size_t i = 0; i + 1 <= count; ++i) {
      RatVec r(n, 0);
      r[i] = 1;
      r[i + 1] = -1;
      s.push_back(r);
    }
  };
  if (type == "A") {
    chain(rank, rank + 1);
  } else if (type == "BC") {
    chain(rank - 1, rank);
    s.push_back(unit(rank, rank - 1));
  } else if (type == "D") {
    chain(rank - 1, rank);
    RatVec r(rank, 0);
    r[rank - 2] = 1;
    r[rank - 1] = 1;
    s.push_back(r);
  } else if (type == "G2") {
    s.push_back({1, -1, 0});
    s.push_back({-2, 1, 1});
  } else if (type == "F4") {
    s.push_back({0, 1, -1, 0});
    s.push_back({0, 0, 1, -1});
    s.push_back({0, 0, 0, 1});
    s.push_back({Rational(1, 2), Rational(-1, 2), Rational(-1, 2), Rational(-1, 2)});
  } else if (type == "E6" || type == "E7" || type == "E8") {
    const std::size_t n = type[1] - '0';
    s.push_back({Rational(1, 2), Rational(-1, 2), Rational(-1, 2), Rational(-1, 2),
                 Rational(-1, 2), Rational(-1, 2), Rational(-1, 2), Rational(1, 2)});
    s.push_back({1, 1, 0, 0, 0, 0, 0, 0});
    for (std::size_t k = 3; k <= n; ++k) {
      RatVec r(8, 0);
      r[k - 2] = 1;
      r[k - 3] = -1;
      s.push_back(r);
    }
  } else {
    throw std::invalid_argument("unknown pattern type: " + type);
  }
  return s;
}

struct SelectorTerm {
  std::size_t index;
  int sign;
};

}  // namespace

RatMat Arrangement::gram() const { return rat_mul(realization, rat_transpose(realization)); }

std::size_t Arrangement::index_of(const RatVec& normal) const {
  const std::vector<Int> canon = primitive_integer(normal);
  for (std::size_t i = 0; i < hyperplanes.size(); ++i)
    if (hyperplanes[i].normal == canon) return i;
  std::ostringstream os;
  os << "no hyperplane with normal (";
  for (std::size_t i = 0; i < canon.size(); ++i) os << (i ? "," : "") << canon[i];
  os << ") in the pattern";
  throw std::invalid_argument(os.str());
}

bool Arrangement::has_normal(const RatVec& normal) const {
  const std::vector<Int> canon = primitive_integer(normal);
  return std::any_of(hyperplanes.begin(), hyperplanes.end(),
                     [&](const Hyperplane& h) { return h.normal == canon; });
}

Arrangement build_irreducible(const std::string& type, std::size_t rank) {
  Arrangement arr;
  if (type == "A") {
    if (rank < 1) throw std::invalid_argument("type A requires rank >= 1");
    arr = build_type_a(rank);
  } else if (type == "BC") {
    if (rank < 2) throw std::invalid_argument("type BC requires rank >= 2");
    arr = build_type_bc(rank);
  } else if (type == "D") {
    if (rank < 4)
      throw std::invalid_argument(
          "type D requires rank >= 4; D2 and D3 coincide with type-A patterns "
          "and must be requested as such");
    arr = build_type_d(rank);
  } else if (type == "G2" || type == "F4" || type == "E6" || type == "E7" || type == "E8") {
    const std::size_t fixed = type == "G2" ? 2 : type == "F4" ? 4 : type[1] - '0';
    if (rank != fixed)
      throw std::invalid_argument("type " + type + " has fixed rank " + std::to_string(fixed));
    if (type == "G2")
      arr = build_type_g2();
    else if (type == "F4")
      arr = build_type_f4();
    else
      arr = build_type_e(rank);
  } else {
    throw std::invalid_argument("unknown pattern type: " + type);
  }
  finish_hyperplanes(arr);
  return arr;
}

Arrangement build_product(const std::vector<Arrangement>& factors) {
  if (factors.empty()) throw std::invalid_argument("product needs at least one factor");
  Arrangement arr;
  for (const auto& f : factors) {
    arr.dim += f.dim;
    arr.real_dim += f.real_dim;
  }
  arr.realization = rat_zeros(arr.dim, arr.real_dim);
  std::size_t doff = 0, noff = 0;
  const bool all_roots = std::all_of(factors.begin(), factors.end(), [](const Arrangement& f) {
    return f.roots.size() == f.hyperplanes.size() && !f.hyperplanes.empty();
  });
  for (const auto& f : factors) {
    for (std::size_t i = 0; i < f.dim; ++i)
      for (std::size_t j = 0; j < f.real_dim; ++j)
        arr.realization[doff + i][noff + j] = f.realization[i][j];
    for (std::size_t h = 0; h < f.hyperplanes.size(); ++h) {
      std::vector<Int> normal(arr.dim, 0);
      for (std::size_t k = 0; k < f.dim; ++k) normal[doff + k] = f.hyperplanes[h].normal[k];
      arr.hyperplanes.push_back({std::move(normal)});
      if (all_roots) {
        std::vector<Int> root(arr.real_dim, 0);
        for (std::size_t k = 0; k < f.real_dim; ++k) root[noff + k] = f.roots[h][k];
        arr.roots.push_back(std::move(root));
      }
    }
    for (const auto& fi : f.factors) arr.factors.push_back({fi.type, fi.rank, doff + fi.offset});
    doff += f.dim;
    noff += f.real_dim;
  }
  finish_hyperplanes(arr);
  return arr;
}

Arrangement build_sign_pair_pattern(std::size_t n) {
  if (n < 2) throw std::invalid_argument("sign-pair pattern requires dimension >= 2");
  Arrangement arr;
  arr.dim = n;
  arr.real_dim = n;
  arr.realization = rat_identity(n);
  push_sign_pairs(arr, n);
  arr.factors = {{n >= 4 ? "D" : "pm", n, 0}};
  finish_hyperplanes(arr);
  return arr;
}

Arrangement parse_pattern_spec(const std::string& spec) {
  if (!spec.empty() && spec.back() == 'x')
    throw std::invalid_argument("pattern spec ends with a dangling product separator");
  std::vector<Arrangement> factors;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    std::size_t end = spec.find('x', pos);
    if (end == std::string::npos) end = spec.size();
    const std::string token = spec.substr(pos, end - pos);
    std::size_t split = 0;
    while (split < token.size() && std::isalpha(static_cast<unsigned char>(token[split])))
      ++split;
    if (split == 0 || split == token.size())
      throw std::invalid_argument("bad pattern token: '" + token + "'");
    const std::string type = token.substr(0, split);
    std::size_t rank = 0;
    for (std::size_t i = split; i < token.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(token[i])))
        throw std::invalid_argument("bad pattern token: '" + token + "'");
      rank = rank * 10 + static_cast<std::size_t>(token[i] - '0');
    }
    // G2/F4/E6/E7/E8 carry the rank in the tag itself.
    if (type == "G" || type == "F" || type == "E")
      factors.push_back(build_irreducible(type + std::to_string(rank), rank));
    else
      factors.push_back(build_irreducible(type, rank));
    pos = end + 1;
  }
  if (factors.empty()) throw std::invalid_argument("empty pattern spec");
  if (factors.size() == 1) return factors[0];
  return build_product(factors);
}

std::size_t hyperplane_count(const Arrangement& arr) { return arr.hyperplanes.size(); }

namespace {

std::vector<std::size_t> containing_hyperplanes(const Arrangement& arr, const RatMat& basis) {
  std::vector<std::size_t> out;
  for (std::size_t h = 0; h < arr.hyperplanes.size(); ++h) {
    const RatVec u = to_rational(arr.hyperplanes[h].normal);
    bool contains = true;
    for (const auto& row : basis)
      if (rat_dot(u, row) != 0) {
        contains = false;
        break;
      }
    if (contains) out.push_back(h);
  }
  return out;
}

SingularSubspace make_subspace(const Arrangement& arr, RatMat basis) {
  Rref r = rat_rref(std::move(basis));
  SingularSubspace sub;
  sub.basis = std::move(r.mat);
  sub.dim = r.rank;
  sub.containing = containing_hyperplanes(arr, sub.basis);
  return sub;
}

}  // namespace

std::vector<SingularSubspace> singular_subspaces(const Arrangement& arr, std::size_t min_dim,
                                                 std::size_t max_results) {
  if (arr.dim > 8)
    throw std::invalid_argument("singular subspace enumeration is capped at dimension 8");
  std::map<std::string, SingularSubspace> seen;
  std::deque<std::string> frontier;
  SingularSubspace ambient = make_subspace(arr, rat_identity(arr.dim));
  const std::string ambient_key = basis_key(ambient.basis);
  if (ambient.dim >= min_dim) {
    frontier.push_back(ambient_key);
    seen.emplace(ambient_key, std::move(ambient));
  }
  while (!frontier.empty()) {
    const SingularSubspace cur = seen.at(frontier.front());
    frontier.pop_front();
    if (cur.dim == 0 || cur.dim - 1 < min_dim) continue;
    std::set<std::size_t> skip(cur.containing.begin(), cur.containing.end());
    for (std::size_t h = 0; h < arr.hyperplanes.size(); ++h) {
      if (skip.count(h)) continue;
      const RatVec u = to_rational(arr.hyperplanes[h].normal);
      // Normal restricted to the current subspace's coordinates.
      RatVec w(cur.dim);
      for (std::size_t k = 0; k < cur.dim; ++k) w[k] = rat_dot(u, cur.basis[k]);
      if (rat_is_zero_vec(w)) continue;
      RatMat lifted;
      for (const auto& nv : rat_nullspace({w}, cur.dim)) {
        RatVec row(arr.dim, 0);
        for (std::size_t k = 0; k < cur.dim; ++k)
          for (std::size_t j = 0; j < arr.dim; ++j) row[j] += nv[k] * cur.basis[k][j];
        lifted.push_back(std::move(row));
      }
      SingularSubspace next = make_subspace(arr, std::move(lifted));
      std::string key = basis_key(next.basis);
      if (seen.count(key)) continue;
      if (seen.size() >= max_results)
        throw std::length_error("singular subspace enumeration exceeded the result cap");
      frontier.push_back(key);
      seen.emplace(std::move(key), std::move(next));
    }
  }
  std::vector<SingularSubspace> out;
  out.reserve(seen.size());
  for (auto& [key, sub] : seen) out.push_back(std::move(sub));
  std::sort(out.begin(), out.end(), [](const SingularSubspace& a, const SingularSubspace& b) {
    if (a.dim != b.dim) return a.dim > b.dim;
    return basis_key(a.basis) < basis_key(b.basis);
  });
  return out;
}

SingularSubspace hyperplane_subspace(const Arrangement& arr, std::size_t index) {
  if (index >= arr.hyperplanes.size()) throw std::out_of_range("hyperplane index out of range");
  const RatMat normals = {to_rational(arr.hyperplanes[index].normal)};
  return make_subspace(arr, rat_rref(RatMat(rat_nullspace(normals, arr.dim))).mat);
}

bool is_singular_subspace(const Arrangement& arr, const SingularSubspace& sub) {
  if (sub.basis.size() != sub.dim) return false;
  const Rref r = rat_rref(sub.basis);
  if (r.rank != sub.dim || r.mat != sub.basis) return false;
  if (sub.dim == arr.dim) return true;
  RatMat normals;
  for (std::size_t h : containing_hyperplanes(arr, sub.basis))
    normals.push_back(to_rational(arr.hyperplanes[h].normal));
  return arr.dim - rat_rank(normals) == sub.dim;
}

Arrangement restrict(const Arrangement& arr, const SingularSubspace& sub) {
  if (!is_singular_subspace(arr, sub))
    throw std::invalid_argument("restriction target is not a singular subspace of the pattern");
  if (sub.dim == arr.dim) return arr;
  if (sub.dim == 0) throw std::invalid_argument("cannot restrict to the zero subspace");
  Arrangement out;
  out.dim = sub.dim;
  out.real_dim = arr.real_dim;
  out.realization = rat_mul(sub.basis, arr.realization);
  std::set<std::vector<Int>, bool (*)(const std::vector<Int>&, const std::vector<Int>&)>
      normals(int_vec_less);
  for (const auto& h : arr.hyperplanes) {
    const RatVec u = to_rational(h.normal);
    RatVec w(sub.dim);
    for (std::size_t k = 0; k < sub.dim; ++k) w[k] = rat_dot(u, sub.basis[k]);
    if (rat_is_zero_vec(w)) continue;
    normals.insert(primitive_integer(w));
  }
  for (const auto& n : normals) out.hyperplanes.push_back({n});
  out.factors = {{"restricted", sub.dim, 0}};
  return out;
}

std::size_t codim1_residual_dim(const Arrangement& arr) {
  if (arr.hyperplanes.size() < 2)
    throw std::invalid_argument("codim1_residual_dim needs at least 2 hyperplanes");
  std::size_t best = 0;
  for (std::size_t skip = 0; skip < arr.hyperplanes.size(); ++skip) {
    RatMat normals;
    for (std::size_t h = 0; h < arr.hyperplanes.size(); ++h)
      if (h != skip) normals.push_back(to_rational(arr.hyperplanes[h].normal));
    best = std::max(best, arr.dim - rat_rank(normals));
  }
  return best;
}

std::size_t positive_root_count_oracle(const std::string& type, std::size_t rank) {
  const std::vector<RatVec> simple = simple_roots(type, rank);
  std::set<std::vector<Int>, bool (*)(const std::vector<Int>&, const std::vector<Int>&)>
      lines(int_vec_less);
  std::deque<RatVec> work;
  auto add = [&](const RatVec& r) {
    std::vector<Int> key = primitive_integer(r);
    if (lines.count(key)) return;
    work.push_back(to_rational(key));
    lines.insert(std::move(key));
  };
  // Every root line is in the orbit of a simple root under the reflections in
  // the simple roots, so closure under those reflections enumerates them all.
  for (const auto& r : simple) add(r);
  while (!work.empty()) {
    const RatVec r = std::move(work.front());
    work.pop_front();
    for (const auto& s : simple) {
      const Rational c = 2 * rat_dot(r, s) / rat_dot(s, s);
      RatVec image = r;
      for (std::size_t k = 0; k < image.size(); ++k) image[k] -= c * s[k];
      add(image);
    }
  }
  return lines.size();
}

bool reflection_closure_holds(const Arrangement& arr) {
  if (arr.roots.size() != arr.hyperplanes.size() || arr.roots.empty())
    throw std::logic_error("reflection closure check needs the defining covectors");
  std::set<std::vector<Int>, bool (*)(const std::vector<Int>&, const std::vector<Int>&)>
      lines(int_vec_less);
  for (const auto& r : arr.roots) lines.insert(primitive_integer(to_rational(r)));
  for (const auto& ri : arr.roots)
    for (const auto& rj : arr.roots) {
      const RatVec r = to_rational(ri), s = to_rational(rj);
      const Rational c = 2 * rat_dot(r, s) / rat_dot(s, s);
      RatVec image = r;
      for (std::size_t k = 0; k < image.size(); ++k) image[k] -= c * s[k];
      if (!lines.count(primitive_integer(image))) return false;
    }
  return true;
}

namespace {

/// Subspace {x_1 = ... = x_m} in R^n as a canonical singular subspace.
SingularSubspace equalize_prefix(const Arrangement& arr, std::size_t m) {
  RatMat normals;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    RatVec u(arr.dim, 0);
    u[k] = 1;
    u[k + 1] = -1;
    normals.push_back(std::move(u));
  }
  return make_subspace(arr, RatMat(rat_nullspace(normals, arr.dim)));
}

ChainLevel certify_level(const Arrangement& arr, SingularSubspace sub) {
  ChainLevel level;
  const Arrangement restricted = restrict(arr, sub);
  const Arrangement embedded = build_sign_pair_pattern(restricted.dim);
  level.restricted_count = restricted.count();
  level.embedded_count = embedded.count();
  level.embedding_ok = std::all_of(
      embedded.hyperplanes.begin(), embedded.hyperplanes.end(),
      [&](const Hyperplane& h) { return restricted.has_normal(to_rational(h.normal)); });
  level.subspace = std::move(sub);
  return level;
}

}  // namespace

ChainCertificate successive_chain(const Arrangement& arr) {
  if (arr.factors.size() != 1)
    throw std::invalid_argument("restriction chains are defined for irreducible patterns");
  const std::string& type = arr.factors[0].type;
  const std::size_t n = arr.dim;
  const bool supported = (type == "BC" && n >= 3) || (type == "D" && n >= 4) || type == "F4";
  if (!supported)
    throw std::invalid_argument("no restriction chain construction for this pattern type");
  ChainCertificate cert;
  // Nested subspaces {x_1 = ... = x_{n-i+1}} of dims i = n-1, ..., 2. For F4
  // these are exactly the two witness subspaces of dims 3 and 2.
  for (std::size_t dim = n - 1; dim >= 2; --dim)
    cert.levels.push_back(certify_level(arr, equalize_prefix(arr, n - dim + 1)));
  cert.ok = true;
  for (std::size_t i = 0; i < cert.levels.size(); ++i) {
    const ChainLevel& lv = cert.levels[i];
    if (!lv.embedding_ok || lv.restricted_count <= lv.embedded_count) cert.ok = false;
    if (i > 0) {
      // Nesting: each subspace must sit inside the previous one.
      const Rref outer = rat_rref(cert.levels[i - 1].subspace.basis);
      for (const auto& row : lv.subspace.basis)
        if (!rat_in_rowspan(outer, row)) cert.ok = false;
    }
  }
  return cert;
}

std::size_t select_hyperplane(const Arrangement& arr, const std::string& selector) {
  std::string s;
  for (char c : selector)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) throw std::invalid_argument("empty hyperplane selector");
  RatVec covector(arr.real_dim, 0);
  if (s.find(',') != std::string::npos) {
    std::istringstream is(s);
    std::string tok;
    std::size_t i = 0;
    while (std::getline(is, tok, ',')) {
      if (i >= arr.real_dim)
        throw std::invalid_argument("selector has more entries than realization coordinates");
      covector[i++] = parse_rational(tok);
    }
    if (i != arr.real_dim)
      throw std::invalid_argument("selector needs one entry per realization coordinate");
  } else {
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("selector must look like 'x1=x2', 'x1=-x2', 'x1=0' or be a "
                                  "comma-separated covector");
    auto parse_var = [&](const std::string& part) -> std::size_t {
      if (part.size() < 2 || part[0] != 'x')
        throw std::invalid_argument("bad selector variable: '" + part + "'");
      const std::size_t idx = std::stoul(part.substr(1));
      if (idx < 1 || idx > arr.real_dim)
        throw std::invalid_argument("selector variable out of range: '" + part + "'");
      return idx - 1;
    };
    const std::size_t lhs = parse_var(s.substr(0, eq));
    std::string rhs = s.substr(eq + 1);
    covector[lhs] = 1;
    if (rhs != "0") {
      int sign = 1;
      if (!rhs.empty() && rhs[0] == '-') {
        sign = -1;
        rhs = rhs.substr(1);
      }
      const std::size_t r = parse_var(rhs);
      if (r == lhs) throw std::invalid_argument("selector equates a variable with itself");
      covector[r] = -sign;
    }
  }
  RatVec u(arr.dim);
  for (std::size_t k = 0; k < arr.dim; ++k) u[k] = rat_dot(arr.realization[k], covector);
  if (rat_is_zero_vec(u))
    throw std::invalid_argument("selector vanishes on the pattern's realization space");
  return arr.index_of(u);
}

nlohmann::ordered_json arrangement_to_json(const Arrangement& arr) {
  nlohmann::ordered_json j;
  j["schema"] = "pattern/1";
  j["dim"] = arr.dim;
  j["real_dim"] = arr.real_dim;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : arr.realization) {
    auto jr = nlohmann::ordered_json::array();
    for (const auto& x : row) jr.push_back(format_rational(x));
    rows.push_back(std::move(jr));
  }
  j["realization"] = std::move(rows);
  auto hs = nlohmann::ordered_json::array();
  for (const auto& h : arr.hyperplanes) {
    auto jh = nlohmann::ordered_json::array();
    for (const auto& x : h.normal) jh.push_back(x.str());
    hs.push_back(std::move(jh));
  }
  j["hyperplanes"] = std::move(hs);
  auto rs = nlohmann::ordered_json::array();
  for (const auto& r : arr.roots) {
    auto jr = nlohmann::ordered_json::array();
    for (const auto& x : r) jr.push_back(x.str());
    rs.push_back(std::move(jr));
  }
  j["roots"] = std::move(rs);
  auto fs = nlohmann::ordered_json::array();
  for (const auto& f : arr.factors)
    fs.push_back(nlohmann::ordered_json{{"type", f.type}, {"rank", f.rank}, {"offset", f.offset}});
  j["factors"] = std::move(fs);
  return j;
}

Arrangement arrangement_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "pattern/1")
    throw std::invalid_argument("not a serialized pattern (expected schema pattern/1)");
  Arrangement arr;
  arr.dim = j.at("dim").get<std::size_t>();
  arr.real_dim = j.at("real_dim").get<std::size_t>();
  for (const auto& row : j.at("realization")) {
    RatVec r;
    for (const auto& x : row) r.push_back(parse_rational(x.get<std::string>()));
    arr.realization.push_back(std::move(r));
  }
  for (const auto& h : j.at("hyperplanes")) {
    std::vector<Int> normal;
    for (const auto& x : h) normal.emplace_back(x.get<std::string>());
    arr.hyperplanes.push_back({std::move(normal)});
  }
  for (const auto& r : j.at("roots")) {
    std::vector<Int> root;
    for (const auto& x : r) root.emplace_back(x.get<std::string>());
    arr.roots.push_back(std::move(root));
  }
  for (const auto& f : j.at("factors"))
    arr.factors.push_back({f.at("type").get<std::string>(), f.at("rank").get<std::size_t>(),
                           f.at("offset").get<std::size_t>()});
  return arr;
}

}  // namespace qie
