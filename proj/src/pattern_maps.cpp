#include "qie/pattern_maps.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qie {

namespace {

std::string matrix_key(const RatMat& m) {
  std::ostringstream os;
  for (const auto& row : m) {
    for (const auto& x : row) os << format_rational(x) << ',';
    os << ';';
  }
  return os.str();
}

/// Index of the unique factor block supporting this normal.
std::size_t factor_of(const Arrangement& arr, const std::vector<Int>& normal) {
  for (std::size_t f = 0; f < arr.factors.size(); ++f) {
    const auto& fi = arr.factors[f];
    bool inside = false, outside = false;
    for (std::size_t k = 0; k < normal.size(); ++k) {
      if (normal[k] == 0) continue;
      (k >= fi.offset && k < fi.offset + fi.rank ? inside : outside) = true;
    }
    if (inside && !outside) return f;
  }
  throw std::logic_error("hyperplane normal not supported on a single factor block");
}

RatMat gram_block(const RatMat& gram, const FactorInfo& fi) {
  RatMat g(fi.rank, RatVec(fi.rank));
  for (std::size_t i = 0; i < fi.rank; ++i)
    for (std::size_t j = 0; j < fi.rank; ++j) g[i][j] = gram[fi.offset + i][fi.offset + j];
  return g;
}

void require_map_shape(const RatMat& map, const Arrangement& src, const Arrangement& dst) {
  if (map.size() != dst.dim || (map.empty() ? 0 : map[0].size()) != src.dim)
    throw std::invalid_argument("map shape must be d_target x d_source");
  if (src.dim > dst.dim)
    throw std::invalid_argument("source dimension exceeds target: map cannot be injective");
  if (rat_rank(map) != src.dim)
    throw std::invalid_argument("map does not have full column rank");
}

std::vector<RatVec> hyperplane_basis(const Arrangement& arr, std::size_t i) {
  return rat_nullspace({to_rational(arr.hyperplanes[i].normal)}, arr.dim);
}

}  // namespace

PreserveDecision is_pattern_preserving(const RatMat& map, const Arrangement& src,
                                       const Arrangement& dst) {
  require_map_shape(map, src, dst);
  PreserveDecision out;
  out.assignment.reserve(src.count());
  if (src.dim == dst.dim) {
    const RatMat inv = *rat_inverse(map);
    const RatMat normal_action = rat_transpose(inv);  // image normal = T^{-T} u
    for (std::size_t i = 0; i < src.count(); ++i) {
      const RatVec w = rat_apply(normal_action, to_rational(src.hyperplanes[i].normal));
      const std::vector<Int> canon = primitive_integer(w);
      bool found = false;
      for (std::size_t j = 0; j < dst.count(); ++j)
        if (dst.hyperplanes[j].normal == canon) {
          out.assignment.push_back(j);
          found = true;
          break;
        }
      if (!found) {
        out.reason = "image of source hyperplane " + std::to_string(i) +
                     " is not a target hyperplane";
        return out;
      }
    }
    out.preserving = true;
    return out;
  }
  // Injective mode: images must land in singular subspaces of matching dim.
  std::vector<SingularSubspace> candidates;
  for (auto& s : singular_subspaces(dst, src.dim - 1))
    if (s.dim == src.dim - 1) candidates.push_back(std::move(s));
  for (std::size_t i = 0; i < src.count(); ++i) {
    RatMat image;
    for (const auto& b : hyperplane_basis(src, i)) image.push_back(rat_apply(map, b));
    bool found = false;
    for (std::size_t s = 0; s < candidates.size(); ++s) {
      const Rref span = rat_rref(candidates[s].basis);
      if (std::all_of(image.begin(), image.end(),
                      [&](const RatVec& v) { return rat_in_rowspan(span, v); })) {
        out.assignment.push_back(s);
        found = true;
        break;
      }
    }
    if (!found) {
      out.reason = "image of source hyperplane " + std::to_string(i) +
                   " is not inside any singular subspace of its dimension";
      return out;
    }
  }
  out.preserving = true;
  return out;
}

FactorImageReport factor_image(const RatMat& map, const Arrangement& src,
                               const Arrangement& dst) {
  const PreserveDecision dec = is_pattern_preserving(map, src, dst);
  if (!dec.preserving)
    throw std::invalid_argument("factor_image requires a pattern-preserving map: " + dec.reason);
  FactorImageReport report;
  report.total = true;
  for (std::size_t b = 0; b < src.factors.size(); ++b) {
    const auto& fb = src.factors[b];
    std::set<std::size_t> support;
    for (std::size_t f = 0; f < dst.factors.size(); ++f) {
      const auto& ff = dst.factors[f];
      for (std::size_t r = ff.offset; r < ff.offset + ff.rank && !support.count(f); ++r)
        for (std::size_t c = fb.offset; c < fb.offset + fb.rank; ++c)
          if (map[r][c] != 0) {
            support.insert(f);
            break;
          }
    }
    if (support.size() != 1) {
      report.total = false;
      std::ostringstream os;
      os << "source factor " << b << " meets " << support.size() << " target factor blocks";
      report.violation = os.str();
      report.image.push_back(dst.factors.size());  // sentinel
    } else {
      report.image.push_back(*support.begin());
    }
  }
  return report;
}

namespace {

/// Scale each source-factor column block so its first nonzero entry is 1.
RatMat canonicalize_map(RatMat t, const Arrangement& src) {
  for (const auto& fb : src.factors) {
    Rational lead = 0;
    for (std::size_t r = 0; r < t.size() && lead == 0; ++r)
      for (std::size_t c = fb.offset; c < fb.offset + fb.rank; ++c)
        if (t[r][c] != 0) {
          lead = t[r][c];
          break;
        }
    if (lead == 0) throw std::logic_error("map vanishes on a factor block");
    for (auto& row : t)
      for (std::size_t c = fb.offset; c < fb.offset + fb.rank; ++c) row[c] /= lead;
  }
  return t;
}

struct EqualDimSearch {
  const Arrangement& src;
  const Arrangement& dst;
  std::vector<std::size_t> order;        // source hyperplanes grouped by factor
  std::vector<std::size_t> block_of;     // factor index per position in `order`
  std::vector<std::size_t> block_last;   // position of the block's last hyperplane
  std::vector<RatMat> block_rows;        // accumulated constraints per factor
  std::vector<RatVec> block_solution;    // filled at each block's completion
  std::vector<bool> used;
  std::vector<std::size_t> sigma;        // indexed by source hyperplane
  std::vector<PreserverCertificate> found;
  std::set<std::string> seen;

  EqualDimSearch(const Arrangement& s, const Arrangement& d) : src(s), dst(d) {
    for (std::size_t i = 0; i < src.count(); ++i) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return factor_of(src, src.hyperplanes[a].normal) <
             factor_of(src, src.hyperplanes[b].normal);
    });
    block_of.resize(order.size());
    for (std::size_t p = 0; p < order.size(); ++p)
      block_of[p] = factor_of(src, src.hyperplanes[order[p]].normal);
    block_last.assign(src.factors.size(), 0);
    for (std::size_t p = 0; p < order.size(); ++p) block_last[block_of[p]] = p;
    block_rows.resize(src.factors.size());
    block_solution.resize(src.factors.size());
    used.assign(dst.count(), false);
    sigma.assign(src.count(), 0);
  }

  std::size_t block_unknowns(std::size_t b) const { return dst.dim * src.factors[b].rank; }

  /// Parallelism constraints on the columns of S in block b from S u = λ v.
  RatMat constraint_rows(std::size_t b, const std::vector<Int>& u_int,
                         const std::vector<Int>& v_int) const {
    const auto& fb = src.factors[b];
    const RatVec u = to_rational(u_int);
    std::size_t k0 = 0;
    while (v_int[k0] == 0) ++k0;
    RatMat rows;
    for (std::size_t k = 0; k < dst.dim; ++k) {
      if (k == k0) continue;
      RatVec row(block_unknowns(b), 0);
      // v[k0]*(S u)_k - v[k]*(S u)_{k0} = 0, unknowns S[r][c], c in block b.
      for (std::size_t c = 0; c < fb.rank; ++c) {
        const Rational& uc = u[fb.offset + c];
        if (uc == 0) continue;
        row[k * fb.rank + c] += Rational(v_int[k0]) * uc;
        row[k0 * fb.rank + c] -= Rational(v_int[k]) * uc;
      }
      if (!rat_is_zero_vec(row)) rows.push_back(std::move(row));
    }
    return rows;
  }

  void complete(const SearchConfig& config);

  void step(std::size_t pos, const SearchConfig& config) {
    if (pos == order.size()) {
      complete(config);
      return;
    }
    std::size_t used_count = 0;
    for (bool u : used) used_count += u;
    if (order.size() - pos > dst.count() - used_count) return;  // pigeonhole
    const std::size_t i = order[pos];
    const std::size_t b = block_of[pos];
    for (std::size_t j = 0; j < dst.count(); ++j) {
      if (used[j]) continue;
      const RatMat added = constraint_rows(b, src.hyperplanes[i].normal,
                                           dst.hyperplanes[j].normal);
      const std::size_t rollback = block_rows[b].size();
      for (const auto& row : added) block_rows[b].push_back(row);
      const std::size_t dim_left = block_unknowns(b) - rat_rank(block_rows[b]);
      bool viable = dim_left > 0;
      if (viable && pos == block_last[b]) {
        const auto basis = rat_nullspace(block_rows[b], block_unknowns(b));
        if (basis.size() > 1)
          throw std::logic_error("positive-dimensional preserver family in one factor block");
        block_solution[b] = basis[0];
      }
      if (viable) {
        used[j] = true;
        sigma[i] = j;
        step(pos + 1, config);
        used[j] = false;
      }
      block_rows[b].resize(rollback);
    }
  }
};

void EqualDimSearch::complete(const SearchConfig& config) {
  (void)config;
  // Assemble S column-block by column-block, then T = S^{-T}.
  RatMat s_mat = rat_zeros(dst.dim, src.dim);
  for (std::size_t b = 0; b < src.factors.size(); ++b) {
    const auto& fb = src.factors[b];
    const RatVec& sol = block_solution[b];
    for (std::size_t k = 0; k < dst.dim; ++k)
      for (std::size_t c = 0; c < fb.rank; ++c) s_mat[k][fb.offset + c] = sol[k * fb.rank + c];
  }
  const auto inv = rat_inverse(s_mat);
  if (!inv) return;
  RatMat t = canonicalize_map(rat_transpose(*inv), src);
  std::string key = matrix_key(t);
  if (seen.count(key)) return;
  const PreserveDecision dec = is_pattern_preserving(t, src, dst);
  if (!dec.preserving || dec.assignment != sigma)
    throw std::logic_error("search produced an inconsistent certificate");
  const FactorImageReport report = factor_image(t, src, dst);
  PreserverCertificate cert;
  cert.map = std::move(t);
  cert.assignment = sigma;
  cert.factor_map = report.image;
  cert.factor_total = report.total;
  seen.insert(std::move(key));
  found.push_back(std::move(cert));
}

struct InjectiveSearch {
  const Arrangement& src;
  const Arrangement& dst;
  std::vector<SingularSubspace> targets;       // dim d_src-1 singular subspaces
  std::vector<std::vector<RatVec>> src_bases;  // per source hyperplane
  RatMat rows;                                 // global accumulated constraints
  std::vector<bool> used;
  std::vector<std::size_t> sigma;
  std::vector<PreserverCertificate> found;
  std::set<std::string> seen;

  InjectiveSearch(const Arrangement& s, const Arrangement& d) : src(s), dst(d) {
    for (auto& sub : singular_subspaces(dst, src.dim - 1))
      if (sub.dim == src.dim - 1) targets.push_back(std::move(sub));
    for (std::size_t i = 0; i < src.count(); ++i) src_bases.push_back(hyperplane_basis(src, i));
    used.assign(targets.size(), false);
    sigma.assign(src.count(), 0);
  }

  std::size_t unknowns() const { return dst.dim * src.dim; }

  RatMat constraint_rows(std::size_t i, const SingularSubspace& sub) const {
    RatMat out;
    for (std::size_t h : sub.containing) {
      const RatVec u = to_rational(dst.hyperplanes[h].normal);
      for (const auto& w : src_bases[i]) {
        RatVec row(unknowns(), 0);
        for (std::size_t r = 0; r < dst.dim; ++r) {
          if (u[r] == 0) continue;
          for (std::size_t c = 0; c < src.dim; ++c)
            if (w[c] != 0) row[r * src.dim + c] = u[r] * w[c];
        }
        if (!rat_is_zero_vec(row)) out.push_back(std::move(row));
      }
    }
    return out;
  }

  void step(std::size_t i) {
    if (i == src.count()) {
      complete();
      return;
    }
    std::size_t used_count = 0;
    for (bool u : used) used_count += u;
    if (src.count() - i > targets.size() - used_count) return;
    for (std::size_t s = 0; s < targets.size(); ++s) {
      if (used[s]) continue;
      const RatMat added = constraint_rows(i, targets[s]);
      const std::size_t rollback = rows.size();
      for (const auto& row : added) rows.push_back(row);
      if (unknowns() - rat_rank(rows) > 0) {
        used[s] = true;
        sigma[i] = s;
        step(i + 1);
        used[s] = false;
      }
      rows.resize(rollback);
    }
  }

  void complete() {
    const auto basis = rat_nullspace(rows, unknowns());
    if (basis.size() > 1)
      throw std::logic_error("positive-dimensional injective preserver family");
    RatMat t(dst.dim, RatVec(src.dim));
    for (std::size_t r = 0; r < dst.dim; ++r)
      for (std::size_t c = 0; c < src.dim; ++c) t[r][c] = basis[0][r * src.dim + c];
    if (rat_rank(t) != src.dim) return;
    t = canonicalize_map(std::move(t), src);
    std::string key = matrix_key(t);
    if (seen.count(key)) return;
    const PreserveDecision dec = is_pattern_preserving(t, src, dst);
    if (!dec.preserving) throw std::logic_error("injective search produced a non-preserver");
    const FactorImageReport report = factor_image(t, src, dst);
    PreserverCertificate cert;
    cert.map = std::move(t);
    cert.assignment = sigma;
    cert.factor_map = report.image;
    cert.factor_total = report.total;
    seen.insert(std::move(key));
    found.push_back(std::move(cert));
  }
};

}  // namespace

std::vector<PreserverCertificate> search_preservers(const Arrangement& src,
                                                    const Arrangement& dst,
                                                    const SearchConfig& config) {
  if (src.dim > config.rank_cap || dst.dim > config.rank_cap)
    throw std::invalid_argument(
        "total rank exceeds the search cap; raise SearchConfig.rank_cap to allow this");
  std::vector<PreserverCertificate> out;
  if (src.dim == dst.dim) {
    EqualDimSearch search(src, dst);
    search.step(0, config);
    out = std::move(search.found);
  } else if (src.dim < dst.dim) {
    if (!config.allow_injective)
      throw std::invalid_argument(
          "source and target dimensions differ; enable SearchConfig.allow_injective");
    if (src.dim < 2)
      throw std::invalid_argument("injective-mode search needs source rank >= 2");
    InjectiveSearch search(src, dst);
    search.step(0);
    out = std::move(search.found);
  } else {
    throw std::invalid_argument("source dimension exceeds target dimension");
  }
  std::sort(out.begin(), out.end(), [](const PreserverCertificate& a,
                                       const PreserverCertificate& b) {
    return a.assignment < b.assignment;
  });
  return out;
}

std::vector<bool> is_conformal_per_factor(const RatMat& map, const Arrangement& src,
                                          const Arrangement& dst) {
  const FactorImageReport report = factor_image(map, src, dst);
  if (!report.total)
    throw std::invalid_argument("conformality is per factor pair: " + report.violation);
  const RatMat g_src = src.gram();
  const RatMat g_dst = dst.gram();
  std::vector<bool> out;
  for (std::size_t b = 0; b < src.factors.size(); ++b) {
    const auto& fb = src.factors[b];
    const auto& ff = dst.factors[report.image[b]];
    RatMat block(ff.rank, RatVec(fb.rank));
    for (std::size_t r = 0; r < ff.rank; ++r)
      for (std::size_t c = 0; c < fb.rank; ++c) block[r][c] = map[ff.offset + r][fb.offset + c];
    const RatMat q = rat_mul(rat_mul(rat_transpose(block), gram_block(g_dst, ff)), block);
    const RatMat gb = gram_block(g_src, fb);
    const Rational c = q[0][0] / gb[0][0];
    out.push_back(c > 0 && q == rat_scale(gb, c));
  }
  return out;
}

namespace {

RatMat reflection_matrix(const RatMat& gram_inv, const RatVec& normal) {
  const RatVec w = rat_apply(gram_inv, normal);
  const Rational denom = rat_dot(normal, w);
  RatMat r = rat_identity(normal.size());
  for (std::size_t i = 0; i < normal.size(); ++i)
    for (std::size_t j = 0; j < normal.size(); ++j) r[i][j] -= 2 * w[i] * normal[j] / denom;
  return r;
}

std::vector<RatMat> reflection_group_elements(const std::vector<RatMat>& generators,
                                              std::size_t dim, std::size_t cap) {
  std::map<std::string, RatMat> seen;
  std::vector<const RatMat*> frontier;
  const RatMat id = rat_identity(dim);
  seen.emplace(matrix_key(id), id);
  frontier.push_back(&seen.begin()->second);
  while (!frontier.empty()) {
    std::vector<const RatMat*> next;
    for (const RatMat* m : frontier)
      for (const auto& g : generators) {
        RatMat prod = rat_mul(g, *m);
        std::string key = matrix_key(prod);
        if (seen.count(key)) continue;
        if (seen.size() >= cap)
          throw std::logic_error("reflection group closure exceeded its cap");
        auto [it, ok] = seen.emplace(std::move(key), std::move(prod));
        next.push_back(&it->second);
      }
    frontier = std::move(next);
  }
  std::vector<RatMat> out;
  out.reserve(seen.size());
  for (auto& [k, m] : seen) out.push_back(std::move(m));
  return out;
}

std::vector<RatMat> sampled_words(const std::vector<RatMat>& generators, std::size_t dim) {
  std::map<std::string, RatMat> seen;
  const RatMat id = rat_identity(dim);
  seen.emplace(matrix_key(id), id);
  std::uint64_t state = 0x6a09e667f3bcc908ULL;  // fixed: enumeration is deterministic
  auto next = [&state] {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return state >> 33;
  };
  for (int word = 0; word < 128; ++word) {
    RatMat m = rat_identity(dim);
    const std::size_t len = 1 + next() % 12;
    for (std::size_t k = 0; k < len; ++k) m = rat_mul(generators[next() % generators.size()], m);
    seen.emplace(matrix_key(m), std::move(m));
  }
  std::vector<RatMat> out;
  for (auto& [k, m] : seen) out.push_back(std::move(m));
  return out;
}

/// Order-3 outer symmetry of the sign-pair pattern in R^4 (fixed realization).
RatMat d4_outer_symmetry() {
  const Rational h(1, 2);
  return {{h, h, h, h}, {h, h, -h, -h}, {h, -h, h, -h}, {-h, h, h, -h}};
}

}  // namespace

std::vector<RatMat> enumerate_symmetry_preservers(const Arrangement& arr) {
  const RatMat gram = arr.gram();
  std::vector<std::vector<RatMat>> per_factor;
  for (std::size_t b = 0; b < arr.factors.size(); ++b) {
    const auto& fb = arr.factors[b];
    const RatMat g = gram_block(gram, fb);
    const RatMat g_inv = *rat_inverse(g);
    std::vector<RatMat> generators;
    for (const auto& h : arr.hyperplanes) {
      bool mine = true;
      RatVec block_normal(fb.rank, 0);
      for (std::size_t k = 0; k < h.normal.size(); ++k) {
        if (h.normal[k] == 0) continue;
        if (k < fb.offset || k >= fb.offset + fb.rank) {
          mine = false;
          break;
        }
        block_normal[k - fb.offset] = Rational(h.normal[k]);
      }
      if (mine) generators.push_back(reflection_matrix(g_inv, block_normal));
    }
    std::vector<RatMat> elements = fb.rank <= 4
                                       ? reflection_group_elements(generators, fb.rank, 5000)
                                       : sampled_words(generators, fb.rank);
    if (fb.type == "D" && fb.rank == 4) {
      const RatMat tau = d4_outer_symmetry();
      const RatMat tau2 = rat_mul(tau, tau);
      std::vector<RatMat> extended = elements;
      for (const auto& w : elements) {
        extended.push_back(rat_mul(w, tau));
        extended.push_back(rat_mul(w, tau2));
      }
      elements = std::move(extended);
    }
    per_factor.push_back(std::move(elements));
  }

  // Factor permutations between blocks of identical signature.
  std::vector<std::vector<std::size_t>> perms;
  std::vector<std::size_t> perm(arr.factors.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  do {
    bool ok = true;
    for (std::size_t b = 0; b < perm.size() && ok; ++b)
      ok = arr.factors[perm[b]].type == arr.factors[b].type &&
           arr.factors[perm[b]].rank == arr.factors[b].rank;
    if (ok) perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::size_t total = perms.size();
  for (const auto& list : per_factor) total *= list.size();
  if (total > 200000) throw std::length_error("symmetry enumeration too large");

  std::vector<RatMat> out;
  out.reserve(total);
  std::vector<std::size_t> choice(arr.factors.size(), 0);
  for (const auto& p : perms) {
    std::fill(choice.begin(), choice.end(), 0);
    while (true) {
      RatMat t = rat_zeros(arr.dim, arr.dim);
      for (std::size_t b = 0; b < arr.factors.size(); ++b) {
        const auto& fb = arr.factors[b];
        const auto& ft = arr.factors[p[b]];
        const RatMat& w = per_factor[b][choice[b]];
        for (std::size_t r = 0; r < fb.rank; ++r)
          for (std::size_t c = 0; c < fb.rank; ++c) t[ft.offset + r][fb.offset + c] = w[r][c];
      }
      if (!is_pattern_preserving(t, arr, arr).preserving)
        throw std::logic_error("symmetry enumeration produced a non-preserver");
      out.push_back(std::move(t));
      std::size_t b = 0;
      while (b < choice.size() && ++choice[b] == per_factor[b].size()) choice[b++] = 0;
      if (b == choice.size()) break;
    }
  }
  return out;
}

ARestrictionWitness a_type_restriction_witness(std::size_t n, std::size_t hyperplane_index) {
  if (n < 2) throw std::invalid_argument("need rank n >= 2");
  const Arrangement big = build_irreducible("A", n);
  if (hyperplane_index >= big.count()) throw std::out_of_range("hyperplane index out of range");
  ARestrictionWitness wit;
  wit.hyperplane = hyperplane_index;
  wit.subspace = hyperplane_subspace(big, hyperplane_index);
  wit.restricted = restrict(big, wit.subspace);

  // The hyperplane is x_i = x_j in R^{n+1}; merge letters i and j.
  const auto& root = big.roots[hyperplane_index];
  std::size_t i = 0, j = 0;
  for (std::size_t k = 0; k < root.size(); ++k) {
    if (root[k] == 1) i = k;
    if (root[k] == -1) j = k;
  }
  auto letter = [&](std::size_t l) { return l == j ? i : l; };
  auto compress = [&](std::size_t l) { return l > j ? l - 1 : l; };

  const Arrangement small = build_irreducible("A", n - 1);
  const RatMat out_rows = wit.restricted.realization;  // (n-1) x (n+1)
  const RatMat out_rows_t = rat_transpose(out_rows);
  RatMat t(n - 1, RatVec(n - 1));
  for (std::size_t k = 0; k < n - 1; ++k) {
    // Duplicate the merged coordinate of the basis vector, then recenter.
    RatVec y(n + 1, 0);
    for (std::size_t l = 0; l < n + 1; ++l) y[l] = small.realization[k][compress(letter(l))];
    Rational mean = 0;
    for (const auto& v : y) mean += v;
    mean /= Rational(static_cast<int>(n + 1));
    for (auto& v : y) v -= mean;
    const auto coords = rat_solve(out_rows_t, y);
    if (!coords) throw std::logic_error("witness image left the restricted subspace");
    for (std::size_t r = 0; r < n - 1; ++r) t[r][k] = (*coords)[r];
  }
  if (rat_rank(t) != n - 1) throw std::logic_error("witness map is singular");
  wit.map = std::move(t);
  return wit;
}

nlohmann::ordered_json matrix_to_json(const RatMat& m) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : m) {
    auto jr = nlohmann::ordered_json::array();
    for (const auto& x : row) jr.push_back(format_rational(x));
    rows.push_back(std::move(jr));
  }
  return rows;
}

RatMat matrix_from_json(const nlohmann::json& j) {
  RatMat m;
  for (const auto& row : j) {
    RatVec r;
    for (const auto& x : row) r.push_back(parse_rational(x.get<std::string>()));
    m.push_back(std::move(r));
  }
  if (!m.empty())
    for (const auto& row : m)
      if (row.size() != m[0].size()) throw std::invalid_argument("ragged matrix");
  return m;
}

nlohmann::ordered_json certificate_to_json(const PreserverCertificate& cert) {
  nlohmann::ordered_json j;
  j["map"] = matrix_to_json(cert.map);
  j["assignment"] = cert.assignment;
  j["factor_map"] = cert.factor_map;
  j["factor_total"] = cert.factor_total;
  return j;
}

}  // namespace qie
