#include "qie/building.hpp"

#include <algorithm>
#include <climits>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace qie {
namespace {

constexpr long kMaxHnfWindow = 4096;
constexpr long kValClamp = 1L << 30;

long checked_prime(const PadicMatrix& m) {
  if (m.empty() || m.front().empty()) {
    throw std::invalid_argument("lattice matrix must be nonempty");
  }
  long p = m.front().front().prime;
  for (const auto& row : m) {
    for (const auto& e : row) {
      if (e.prime != p) {
        throw std::invalid_argument("lattice matrix mixes different primes");
      }
    }
  }
  return p;
}

long scalar_abs_precision(const PadicScalar& s) {
  if (s.zero) return s.val;
  return s.val + s.prec;
}

/// Column Hermite form of an integral matrix with entries reduced mod
/// p^window. Returns the triangular basis (column i has its pivot p^diag[i]
/// in row i) plus the precision spent on pivot divisions.
struct HnfCore {
  std::vector<long> diag;
  std::vector<std::vector<Int>> cols;  // cols[i][r], upper triangular
  long debt = 0;
};

HnfCore hnf_core(long p, int n, std::vector<std::vector<Int>> cols, long window) {
  Int mod = int_pow(p, window);
  HnfCore out;
  out.diag.assign(n, 0);
  std::vector<int> pivot_of_row(n, -1);
  std::vector<char> used(cols.size(), 0);
  for (int r = n - 1; r >= 0; --r) {
    int best = -1;
    long bestv = window;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (used[j]) continue;
      long v = int_valuation(cols[j][r], p, window);
      if (v < bestv) {
        bestv = v;
        best = static_cast<int>(j);
      }
    }
    if (best < 0) {
      throw std::runtime_error(
          "lattice span is singular at the working precision (no pivot in row " +
          std::to_string(r) + "); increase the working precision or check the rank");
    }
    long a = bestv;
    out.debt += a;
    Int pa = int_pow(p, a);
    Int unit = cols[best][r] / pa;
    Int inv = mod_inverse(unit, p, static_cast<int>(window));
    for (int i = 0; i <= r; ++i) {
      cols[best][i] = cols[best][i] * inv % mod;
    }
    cols[best][r] = pa;
    used[best] = 1;
    pivot_of_row[r] = best;
    out.diag[r] = a;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (used[j]) continue;
      Int e = cols[j][r];
      if (e == 0) continue;
      Int q = e / pa;
      for (int i = 0; i <= r; ++i) {
        cols[j][i] = (cols[j][i] - q * cols[best][i]) % mod;
        if (cols[j][i] < 0) cols[j][i] += mod;
      }
    }
  }
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (used[j]) continue;
    for (int i = 0; i < n; ++i) {
      if (cols[j][i] != 0) {
        throw std::runtime_error(
            "lattice span has more than full rank residue at the working precision; "
            "increase the working precision");
      }
    }
  }
  out.cols.resize(n);
  for (int i = 0; i < n; ++i) out.cols[i] = cols[pivot_of_row[i]];
  // Reduce entries above later pivots mod the pivot of their own row.
  for (int j = 1; j < n; ++j) {
    for (int i = j - 1; i >= 0; --i) {
      Int mi = int_pow(p, out.diag[i]);
      Int e = out.cols[j][i] % mi;
      Int q = (out.cols[j][i] - e) / mi;
      if (q != 0) {
        for (int t = 0; t <= i; ++t) {
          out.cols[j][t] = (out.cols[j][t] - q * out.cols[i][t]) % mod;
          if (out.cols[j][t] < 0) out.cols[j][t] += mod;
        }
      }
    }
  }
  return out;
}

PadicScalar exact_int_scalar(long p, const Int& x, int prec) {
  return padic_from_integer(p, x, prec);
}

/// Chart translations are exact integers (or exact dyadics) by construction;
/// re-declare the certified window at a target width. This picks the integer
/// representative of the residue class, which names the same vertex/class.
PadicScalar lift_exact(const PadicScalar& x, int prec) {
  if (x.zero) return padic_zero(x.prime);
  PadicScalar out = x;
  out.prec = prec;
  return out;
}

PadicScalar padic_cross_entry(const PadicScalar& a, const PadicScalar& b, const PadicScalar& c,
                              const PadicScalar& d) {
  return padic_sub(padic_mul(a, d), padic_mul(b, c));
}

std::array<PadicScalar, 3> padic_cross(const std::array<PadicScalar, 3>& u,
                                       const std::array<PadicScalar, 3>& v) {
  return {padic_cross_entry(u[1], u[2], v[1], v[2]), padic_cross_entry(u[2], u[0], v[2], v[0]),
          padic_cross_entry(u[0], u[1], v[0], v[1])};
}

PadicScalar padic_det3(const PadicMatrix& m) {
  PadicScalar s = padic_mul(m[0][0], padic_cross_entry(m[1][1], m[1][2], m[2][1], m[2][2]));
  s = padic_sub(s, padic_mul(m[0][1], padic_cross_entry(m[1][0], m[1][2], m[2][0], m[2][2])));
  return padic_add(s, padic_mul(m[0][2], padic_cross_entry(m[1][0], m[1][1], m[2][0], m[2][1])));
}

/// Lower bound on the valuation (zero sentinels contribute their certificate).
long val_lower(const PadicScalar& s) { return std::min(s.val, kValClamp); }

/// Minimal valuation with ambiguity detection: throws when a zero certificate
/// sits strictly below every visible nonzero valuation.
long certified_min_valuation(const std::vector<PadicScalar>& items, const char* what) {
  long min_real = kValClamp;
  long min_cert = kValClamp;
  for (const auto& s : items) {
    if (s.zero) {
      min_cert = std::min(min_cert, s.val);
    } else {
      min_real = std::min(min_real, s.val);
    }
  }
  if (min_real == kValClamp && min_cert == kValClamp) {
    throw std::invalid_argument(std::string("empty valuation scan in ") + what);
  }
  if (min_cert < min_real) {
    throw std::runtime_error(std::string("cannot certify the minimal valuation of ") + what +
                             ": a value vanishes at the working precision below the visible "
                             "minimum; increase the working precision");
  }
  return min_real == kValClamp ? min_cert : min_real;
}

std::vector<PadicScalar> two_by_two_minors(const PadicMatrix& t) {
  std::vector<PadicScalar> out;
  int n = static_cast<int>(t.size());
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k) {
      for (int j = 0; j < n; ++j) {
        for (int l = j + 1; l < n; ++l) {
          out.push_back(padic_cross_entry(t[i][j], t[i][l], t[k][j], t[k][l]));
        }
      }
    }
  }
  return out;
}

PadicMatrix padic_identity(long p, int n, int prec) {
  PadicMatrix m(n, std::vector<PadicScalar>(n, padic_zero(p)));
  for (int i = 0; i < n; ++i) m[i][i] = exact_int_scalar(p, 1, prec);
  return m;
}

PadicMatrix padic_mat_mul(const PadicMatrix& a, const PadicMatrix& b) {
  int n = static_cast<int>(a.size());
  int k = static_cast<int>(b.front().size());
  int m = static_cast<int>(b.size());
  long p = a.front().front().prime;
  PadicMatrix out(n, std::vector<PadicScalar>(k, padic_zero(p)));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      PadicScalar acc = padic_zero(p);
      for (int t = 0; t < m; ++t) acc = padic_add(acc, padic_mul(a[i][t], b[t][j]));
      out[i][j] = acc;
    }
  }
  return out;
}

PadicMatrix padic_mat_inverse(const PadicMatrix& m) {
  if (m.size() != 3) throw std::invalid_argument("matrix inverse implemented for 3x3 frames");
  long p = checked_prime(m);
  PadicScalar det = padic_det3(m);
  if (det.zero) {
    throw std::invalid_argument("frame is singular at the working precision");
  }
  PadicScalar inv_det = padic_inv(det);
  PadicMatrix out(3, std::vector<PadicScalar>(3, padic_zero(p)));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
      int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      PadicScalar cof = padic_cross_entry(m[r0][c0], m[r0][c1], m[r1][c0], m[r1][c1]);
      out[i][j] = padic_mul(cof, inv_det);
    }
  }
  return out;
}

// ----------------------------------------------------------------------------
// Tree chart helpers.
// ----------------------------------------------------------------------------

/// Reduce a translation to its canonical residue mod p^level: digits strictly
/// below the level, or the exact zero representative (the vertex is the ball,
/// so any representative of the residue class names the same vertex).
PadicScalar normalize_translation(long level, const PadicScalar& x) {
  if (x.zero) {
    if (x.val < level && x.val < kPadicInfinity) {
      throw std::runtime_error("tree chart translation is only certified to valuation " +
                               std::to_string(x.val) + " but the level is " +
                               std::to_string(level) + "; increase the working precision");
    }
    return padic_zero(x.prime);
  }
  if (x.val >= level) return padic_zero(x.prime);
  long want = level - x.val;
  if (x.prec < want) {
    throw std::runtime_error("tree chart translation carries " + std::to_string(x.prec) +
                             " digits but needs " + std::to_string(want) +
                             "; increase the working precision");
  }
  Int mod = int_pow(x.prime, want);
  Int unit = x.unit % mod;
  if (unit == 0) throw std::logic_error("translation unit lost its leading digit");
  PadicScalar out = x;
  out.unit = unit;
  out.prec = static_cast<int>(want);
  return out;
}

TreeChart make_chart(long p, long level, const PadicScalar& x) {
  TreeChart c;
  c.level = level;
  c.x = normalize_translation(level, x);
  if (c.x.prime != p) throw std::invalid_argument("translation prime mismatch");
  return c;
}

/// Self-embedding on charts (p = 2). See qi_self_embedding_tree.
TreeChart phi_chart(const TreeChart& in) {
  long m = in.level;
  const PadicScalar& x = in.x;
  if (x.prime != 2) throw std::invalid_argument("the tree self-embedding is defined for p = 2");
  if (x.zero || x.val >= m) {
    if (m >= 0) {
      return make_chart(2, m + 1, padic_zero(2, m + 1));
    }
    long j = -m;
    Int code = int_pow(2, j) - 1;
    return make_chart(2, j, padic_from_integer(2, code, static_cast<int>(j + 8)));
  }
  if (x.val >= 0) {
    return make_chart(2, m + 1, padic_shift(x, 1));
  }
  long k = -x.val;
  long out_level = m + 2 * k + 1;
  Int u = padic_residue(padic_shift(x, k), m + k);
  Int code = (int_pow(2, k) - 1) + u * int_pow(2, k + 1);
  return make_chart(2, out_level, padic_from_integer(2, code, static_cast<int>(out_level + 8)));
}

LatticeClass an_map_chart(const TreeChart& c1, const TreeChart& c2) {
  long p = c1.x.prime;
  if (c2.x.prime != p) throw std::invalid_argument("AN-map charts mix primes");
  long t = c1.level, s = c2.level;
  // Window wide enough that the normal form certifies far more digits than
  // any valuation in play (diagonal exponents scale like |t| + |s|).
  int prec = static_cast<int>(8 * (std::labs(t) + std::labs(s) + 16) + 512);
  PadicScalar one = exact_int_scalar(p, 1, prec);
  PadicScalar zero = padic_zero(p);
  PadicMatrix rows = {
      {one, padic_shift(lift_exact(c1.x, prec), -t), padic_shift(lift_exact(c2.x, prec), -s)},
      {zero, padic_shift(one, -t), zero},
      {zero, zero, padic_shift(one, -s)},
  };
  return lattice_normal_form(rows);
}

// ----------------------------------------------------------------------------
// Principal directions of a transition (pivoted elimination with tracking).
// ----------------------------------------------------------------------------

struct SmithDirections {
  std::vector<long> exps;  // ascending along pivots
  PadicMatrix u;           // unimodular, column i pairs with exps[i]
};

SmithDirections smith_directions(PadicMatrix t) {
  int n = static_cast<int>(t.size());
  long p = checked_prime(t);
  int prec_hint = 0;
  for (const auto& row : t) {
    for (const auto& e : row) prec_hint = std::max(prec_hint, e.zero ? 0 : e.prec);
  }
  PadicMatrix u = padic_identity(p, n, prec_hint + 16);
  SmithDirections out;
  for (int step = 0; step < n; ++step) {
    int br = -1, bc = -1;
    long bv = kValClamp;
    long best_cert = kValClamp;
    for (int i = step; i < n; ++i) {
      for (int j = step; j < n; ++j) {
        if (t[i][j].zero) {
          best_cert = std::min(best_cert, t[i][j].val);
        } else if (t[i][j].val < bv) {
          bv = t[i][j].val;
          br = i;
          bc = j;
        }
      }
    }
    if (br < 0 || best_cert < bv) {
      throw std::runtime_error("principal-direction extraction cannot certify the pivot at the "
                               "working precision; increase the working precision");
    }
    if (br != step) {
      std::swap(t[br], t[step]);
      for (int i = 0; i < n; ++i) std::swap(u[i][br], u[i][step]);
    }
    if (bc != step) {
      for (int i = 0; i < n; ++i) std::swap(t[i][bc], t[i][step]);
    }
    PadicScalar pivot_inv = padic_inv(t[step][step]);
    for (int i = step + 1; i < n; ++i) {
      if (t[i][step].zero) continue;
      PadicScalar q = padic_mul(t[i][step], pivot_inv);
      for (int j = step; j < n; ++j) {
        t[i][j] = padic_sub(t[i][j], padic_mul(q, t[step][j]));
      }
      for (int r = 0; r < n; ++r) {
        u[r][step] = padic_add(u[r][step], padic_mul(q, u[r][i]));
      }
    }
    for (int j = step + 1; j < n; ++j) t[step][j] = padic_zero(p);
    out.exps.push_back(bv);
  }
  out.u = std::move(u);
  return out;
}

std::array<PadicScalar, 3> primitive_vector(std::array<PadicScalar, 3> v) {
  long minval = kValClamp;
  for (const auto& e : v) {
    if (!e.zero) minval = std::min(minval, e.val);
  }
  if (minval == kValClamp) throw std::invalid_argument("cannot normalize a zero vector");
  int lead = -1;
  for (int i = 0; i < 3 && lead < 0; ++i) {
    if (!v[i].zero && v[i].val == minval) lead = i;
  }
  PadicScalar scale = padic_inv(padic_shift(v[lead], -minval));
  for (auto& e : v) e = padic_mul(padic_shift(e, -minval), scale);
  return v;
}

long wedge_val_lower(const std::array<PadicScalar, 3>& a, const std::array<PadicScalar, 3>& b) {
  long out = kValClamp;
  const int idx[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (const auto& ij : idx) {
    PadicScalar m = padic_cross_entry(a[ij[0]], a[ij[1]], b[ij[0]], b[ij[1]]);
    out = std::min(out, val_lower(m));
  }
  return out;
}

// ----------------------------------------------------------------------------
// Skeleton distance to apartments and sectors from the valuation profile of
// the transition: for T = diag(p^-a) W the divisor exponents satisfy
//   spread(a) = v(det W) - min_r(mu_r + a_r) - min_i(nu_i - a_i),
// with nu_i the row minima and mu_r the minima of the 2x2 minors avoiding
// row r. The distance minimizes the spread over apartment points p^a.
// ----------------------------------------------------------------------------

struct ValuationShape {
  std::array<long, 3> nu{};
  std::array<long, 3> mu{};
  long vdet = 0;
  bool cone = false;
  std::array<int, 3> order{0, 1, 2};  // a[order[0]] >= a[order[1]] >= a[order[2]]
};

/// Maximize h(a) = min_r(mu_r + a_r) + min_i(nu_i - a_i) over the apartment
/// (all integer a, closed form) or over the sector cone. On the regime where
/// the first min is attained at i and the second at j, h = mu_i + nu_j +
/// (a_i - a_j) and the regime membership plus the cone are pure difference
/// constraints, so each of the 9 regimes is an exact shortest-path problem.
long shape_distance(const ValuationShape& s) {
  long best_h;
  if (!s.cone) {
    // a_r = -mu_r attains the unconstrained optimum.
    best_h = std::min({s.mu[0] + s.nu[0], s.mu[1] + s.nu[1], s.mu[2] + s.nu[2]});
  } else {
    constexpr long kUnreached = LONG_MAX / 4;
    best_h = LONG_MIN;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        // Difference constraints x_v - x_u <= w as edges (u, v, w).
        std::array<std::array<long, 3>, 10> edges{};
        int ne = 0;
        auto add_edge = [&](int u, int v, long w) {
          edges[ne++] = {static_cast<long>(u), static_cast<long>(v), w};
        };
        add_edge(s.order[0], s.order[1], 0);
        add_edge(s.order[1], s.order[2], 0);
        for (int k = 0; k < 3; ++k) {
          if (k != i) add_edge(k, i, s.mu[k] - s.mu[i]);
          if (k != j) add_edge(j, k, s.nu[k] - s.nu[j]);
        }
        // Feasibility: relax from a virtual source connected to every node.
        std::array<long, 3> feas = {0, 0, 0};
        for (int round = 0; round < 3; ++round) {
          for (int e = 0; e < ne; ++e) {
            feas[edges[e][1]] = std::min(feas[edges[e][1]], feas[edges[e][0]] + edges[e][2]);
          }
        }
        bool infeasible = false;
        for (int e = 0; e < ne; ++e) {
          if (feas[edges[e][0]] + edges[e][2] < feas[edges[e][1]]) infeasible = true;
        }
        if (infeasible) continue;
        // Tight bound: max(x_i - x_j) = shortest-path distance j -> i.
        std::array<long, 3> dist = {kUnreached, kUnreached, kUnreached};
        dist[j] = 0;
        for (int round = 0; round < 3; ++round) {
          for (int e = 0; e < ne; ++e) {
            if (dist[edges[e][0]] == kUnreached) continue;
            dist[edges[e][1]] = std::min(dist[edges[e][1]], dist[edges[e][0]] + edges[e][2]);
          }
        }
        if (dist[i] == kUnreached) continue;
        best_h = std::max(best_h, s.mu[i] + s.nu[j] + dist[i]);
      }
    }
    if (best_h == LONG_MIN) {
      throw std::logic_error("sector distance found no feasible regime");
    }
  }
  return std::max(0L, s.vdet - best_h);
}

ValuationShape shape_from_matrix(const PadicMatrix& w, long vdet) {
  ValuationShape s;
  s.vdet = vdet;
  for (int i = 0; i < 3; ++i) {
    long v = kValClamp;
    for (int j = 0; j < 3; ++j) v = std::min(v, val_lower(w[i][j]));
    s.nu[i] = v;
  }
  const int pairs[3][2] = {{1, 2}, {0, 2}, {0, 1}};  // rows avoiding r
  for (int r = 0; r < 3; ++r) {
    long v = kValClamp;
    int i = pairs[r][0], k = pairs[r][1];
    for (int j = 0; j < 3; ++j) {
      for (int l = j + 1; l < 3; ++l) {
        PadicScalar m = padic_cross_entry(w[i][j], w[i][l], w[k][j], w[k][l]);
        v = std::min(v, val_lower(m));
      }
    }
    s.mu[r] = v;
  }
  return s;
}

ValuationShape shape_from_class(const LatticeClass& x, const PadicMatrix& frame) {
  if (x.n != 3) throw std::invalid_argument("apartment distances are defined for n = 3");
  PadicScalar det = padic_det3(frame);
  if (det.zero) throw std::invalid_argument("frame is singular at the working precision");
  PadicMatrix w = padic_mat_mul(padic_mat_inverse(frame), lattice_matrix(x));
  long vdet = std::accumulate(x.diag.begin(), x.diag.end(), 0L) - det.val;
  return shape_from_matrix(w, vdet);
}

/// Analytic transition profile for image points N(d1, d2) diag(1, p^-t, p^-s)
/// read in a corner frame N(eta1, eta2): k1 = v(d1), k2 = v(d2).
ValuationShape corner_shape(long t, long s, long k1, long k2) {
  ValuationShape out;
  out.nu = {std::min({0L, k1 - t, k2 - s}), -t, -s};
  out.mu = {-t - s, std::min(-s, k1 - t - s), std::min(-t, k2 - t - s)};
  out.vdet = -t - s;
  return out;
}

// ----------------------------------------------------------------------------
// Pipeline internals.
// ----------------------------------------------------------------------------

struct Axis {
  long umax = 0;
  std::vector<TreeChart> charts;       // index u + umax
  PadicScalar eta_pos, eta_neg;        // deep translations per direction
  std::vector<long> vpos, vneg;        // v(x(u) - eta) clamped

  const TreeChart& at(long u) const { return charts[static_cast<std::size_t>(u + umax)]; }
  long vcorner(long u, int eps) const {
    return (eps > 0 ? vpos : vneg)[static_cast<std::size_t>(u + umax)];
  }
};

Axis build_axis(long umax, const std::function<TreeChart(long)>& provider) {
  Axis ax;
  ax.umax = umax;
  ax.charts.reserve(static_cast<std::size_t>(2 * umax + 1));
  for (long u = -umax; u <= umax; ++u) ax.charts.push_back(provider(u));
  // Corner valuations from exact integer representatives, so equal prefixes
  // register as genuinely deep agreement instead of window exhaustion.
  int wide = kMaxHnfWindow;
  ax.eta_pos = lift_exact(ax.at(umax).x, wide);
  ax.eta_neg = lift_exact(ax.at(-umax).x, wide);
  for (long u = -umax; u <= umax; ++u) {
    PadicScalar x = lift_exact(ax.at(u).x, wide);
    ax.vpos.push_back(std::min(val_lower(padic_sub(x, ax.eta_pos)), kValClamp / 4));
    ax.vneg.push_back(std::min(val_lower(padic_sub(x, ax.eta_neg)), kValClamp / 4));
  }
  return ax;
}

struct RaySector {
  int eps1 = 1, eps2 = 1;
  std::array<int, 3> order{0, 1, 2};
};

bool flags_match(const BuildingFlag& a, const BuildingFlag& b, long match_val) {
  return wedge_val_lower(a.line, b.line) >= match_val &&
         wedge_val_lower(a.plane_normal, b.plane_normal) >= match_val;
}

struct FrameVerdict {
  bool ok = false;
  long margin = 0;
};

FrameVerdict common_frame_test(const std::vector<BuildingFlag>& flags, long match_val) {
  FrameVerdict out;
  if (flags.empty()) return out;
  std::vector<std::array<PadicScalar, 3>> pool;
  auto push_line = [&](const std::array<PadicScalar, 3>& l) {
    for (const auto& q : pool) {
      if (wedge_val_lower(q, l) >= match_val) return;
    }
    pool.push_back(l);
  };
  for (const auto& f : flags) push_line(f.line);
  for (std::size_t i = 0; i < flags.size(); ++i) {
    for (std::size_t j = i + 1; j < flags.size(); ++j) {
      auto c = padic_cross(flags[i].plane_normal, flags[j].plane_normal);
      bool nonzero = false;
      for (const auto& e : c) nonzero = nonzero || !e.zero;
      if (nonzero) push_line(primitive_vector(c));
    }
  }
  long best = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      for (std::size_t k = j + 1; k < pool.size(); ++k) {
        PadicMatrix m = {{pool[i][0], pool[j][0], pool[k][0]},
                         {pool[i][1], pool[j][1], pool[k][1]},
                         {pool[i][2], pool[j][2], pool[k][2]}};
        PadicScalar det = padic_det3(m);
        if (det.zero || det.val >= match_val) continue;
        std::array<std::array<PadicScalar, 3>, 3> lines = {pool[i], pool[j], pool[k]};
        std::array<std::array<PadicScalar, 3>, 3> normals = {
            primitive_vector(padic_cross(pool[i], pool[j])),
            primitive_vector(padic_cross(pool[i], pool[k])),
            primitive_vector(padic_cross(pool[j], pool[k]))};
        long score = kValClamp;
        for (const auto& f : flags) {
          long lv = 0, pv = 0;
          for (const auto& l : lines) lv = std::max(lv, wedge_val_lower(f.line, l));
          for (const auto& nrm : normals) pv = std::max(pv, wedge_val_lower(f.plane_normal, nrm));
          score = std::min(score, std::min(lv, pv));
        }
        best = std::max(best, score);
      }
    }
  }
  out.margin = best;
  out.ok = best >= match_val;
  return out;
}

PadicMatrix corner_frame(long p, const PadicScalar& eta1, const PadicScalar& eta2, int prec) {
  PadicScalar one = exact_int_scalar(p, 1, prec);
  PadicScalar zero = padic_zero(p);
  return {{one, eta1, eta2}, {zero, one, zero}, {zero, zero, one}};
}

std::vector<PadicMatrix> random_unimodular_frames(long p, int count, std::uint64_t seed,
                                                  int prec) {
  std::mt19937_64 gen(seed);
  std::vector<PadicMatrix> out;
  for (int f = 0; f < count; ++f) {
    PadicMatrix m = padic_identity(p, 3, prec);
    for (int step = 0; step < 8; ++step) {
      int i = static_cast<int>(gen() % 3);
      int j = static_cast<int>(gen() % 3);
      if (i == j) continue;
      long cval = static_cast<long>(gen() % 9) - 4;
      if (cval == 0) continue;
      PadicScalar c = exact_int_scalar(p, cval, prec);
      for (int r = 0; r < 3; ++r) {
        m[r][j] = padic_add(m[r][j], padic_mul(c, m[r][i]));
      }
    }
    int a = static_cast<int>(gen() % 3), b = static_cast<int>(gen() % 3);
    if (a != b) {
      for (int r = 0; r < 3; ++r) std::swap(m[r][a], m[r][b]);
    }
    out.push_back(std::move(m));
  }
  return out;
}

BuildingFlag flag_from_class(const LatticeClass& L) {
  SmithDirections sd = smith_directions(lattice_matrix(L));
  BuildingFlag f;
  f.frame = sd.u;
  f.line = primitive_vector({sd.u[0][0], sd.u[1][0], sd.u[2][0]});
  std::array<PadicScalar, 3> second = {sd.u[0][1], sd.u[1][1], sd.u[2][1]};
  f.plane_normal = primitive_vector(padic_cross(f.line, second));
  f.ray_exponents = {sd.exps[2], sd.exps[1], sd.exps[0]};
  f.depth = std::min(sd.exps[1] - sd.exps[0], sd.exps[2] - sd.exps[1]);
  return f;
}

BuildingNonrigidReport run_flat_pipeline(long p, const std::function<TreeChart(long)>& axis1_fn,
                                         const std::function<TreeChart(long)>& axis2_fn,
                                         const BuildingNonrigidOptions& options) {
  BuildingNonrigidReport report;
  long maxR = 0;
  for (long r : options.radii) {
    if (r <= 0) throw std::invalid_argument("nonrigid radii must be positive");
    maxR = std::max(maxR, r);
  }
  long H = options.flag_horizon;
  if (H < 4) throw std::invalid_argument("flag horizon must be at least 4");
  long umax = std::max(maxR, 2 * H);

  Axis ax1 = build_axis(umax, axis1_fn);
  Axis ax2 = build_axis(umax, axis2_fn);

  // Deep representatives: two transversal rays per quadrant corner.
  std::vector<RaySector> sectors;
  std::vector<BuildingFlag> raw;
  for (int eps1 : {+1, -1}) {
    for (int eps2 : {+1, -1}) {
      for (int shape = 0; shape < 2; ++shape) {
        long u1 = eps1 * (shape == 0 ? 2 * H : H);
        long u2 = eps2 * (shape == 0 ? H : 2 * H);
        LatticeClass deep = an_map_chart(ax1.at(u1), ax2.at(u2));
        raw.push_back(flag_from_class(deep));
        std::array<long, 3> exps = {0, -ax1.at(u1).level, -ax2.at(u2).level};
        RaySector sec;
        sec.eps1 = eps1;
        sec.eps2 = eps2;
        std::array<int, 3> idx = {0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return exps[a] > exps[b]; });
        sec.order = idx;
        sectors.push_back(sec);
      }
    }
  }
  report.raw_flags = raw.size();
  for (const auto& f : raw) {
    bool dup = false;
    for (const auto& g : report.flags) dup = dup || flags_match(f, g, options.match_val);
    if (!dup) report.flags.push_back(f);
  }
  FrameVerdict verdict = common_frame_test(report.flags, options.match_val);
  report.common_frame = verdict.ok;
  report.frame_margin = verdict.margin;

  // Candidate apartments: corner frames, flag-line triples, seeded random.
  // Wide windows keep candidate minors certified far past any distance scale.
  int cand_prec = static_cast<int>(kMaxHnfWindow);
  std::vector<PadicMatrix> candidates;
  for (int eps1 : {+1, -1}) {
    for (int eps2 : {+1, -1}) {
      candidates.push_back(corner_frame(p, eps1 > 0 ? ax1.eta_pos : ax1.eta_neg,
                                        eps2 > 0 ? ax2.eta_pos : ax2.eta_neg, cand_prec));
    }
  }
  const auto& fl = report.flags;
  for (std::size_t i = 0; i < fl.size(); ++i) {
    for (std::size_t j = i + 1; j < fl.size(); ++j) {
      for (std::size_t k = j + 1; k < fl.size(); ++k) {
        PadicMatrix m = {{fl[i].line[0], fl[j].line[0], fl[k].line[0]},
                         {fl[i].line[1], fl[j].line[1], fl[k].line[1]},
                         {fl[i].line[2], fl[j].line[2], fl[k].line[2]}};
        PadicScalar det = padic_det3(m);
        if (!det.zero && det.val < options.match_val) candidates.push_back(m);
      }
    }
  }
  auto rnd = random_unimodular_frames(p, options.random_apartments, options.candidate_seed,
                                      cand_prec);
  candidates.insert(candidates.end(), rnd.begin(), rnd.end());
  report.candidate_count = candidates.size();

  report.radii = options.radii;
  int stride = std::max(1, options.grid_stride);
  for (long R : options.radii) {
    // Supremum over the image grid of the distance to the union of sectors.
    long sup = 0;
    for (long u1 = -R; u1 <= R; u1 += stride) {
      for (long u2 = -R; u2 <= R; u2 += stride) {
        long t = ax1.at(u1).level;
        long s = ax2.at(u2).level;
        long best = kValClamp;
        for (const auto& sec : sectors) {
          ValuationShape sh = corner_shape(t, s, ax1.vcorner(u1, sec.eps1),
                                           ax2.vcorner(u2, sec.eps2));
          sh.cone = true;
          sh.order = sec.order;
          best = std::min(best, shape_distance(sh));
          if (best == 0) break;
        }
        sup = std::max(sup, best);
      }
    }
    report.union_sup.push_back(sup);

    // Sampled image points probed against each candidate apartment.
    std::vector<std::pair<long, long>> samples = {
        {R, R},   {R, -R},  {-R, R},  {-R, -R}, {R, 0},      {-R, 0},     {0, R},
        {0, -R},  {R, R / 2}, {R / 2, R}, {-R, R / 2}, {R / 2, -R}, {-R / 2, R},
        {-R, -R / 2}, {-R / 2, -R}, {0, 0}};
    if (static_cast<int>(samples.size()) > options.boundary_samples) {
      samples.resize(static_cast<std::size_t>(std::max(options.boundary_samples, 4)));
    }
    std::vector<LatticeClass> sample_classes;
    sample_classes.reserve(samples.size());
    for (const auto& uv : samples) {
      sample_classes.push_back(an_map_chart(ax1.at(uv.first), ax2.at(uv.second)));
    }
    long floor = kValClamp;
    for (const auto& frame : candidates) {
      long far = 0;
      for (const auto& cls : sample_classes) {
        ValuationShape sh = shape_from_class(cls, frame);
        far = std::max(far, shape_distance(sh));
      }
      floor = std::min(floor, far);
      if (floor == 0) break;
    }
    report.apartment_floor.push_back(floor);
  }
  return report;
}

}  // namespace

// ----------------------------------------------------------------------------
// Lattice classes.
// ----------------------------------------------------------------------------

LatticeClass base_lattice(long p, int n, int prec) {
  if (n != 2 && n != 3) throw std::invalid_argument("lattice rank must be 2 or 3");
  LatticeClass L;
  L.prime = p;
  L.n = n;
  L.diag.assign(n, 0);
  L.upper.assign(n, std::vector<Int>(n, 0));
  L.prec = prec;
  return L;
}

LatticeClass lattice_normal_form(const PadicMatrix& columns_matrix) {
  int n = static_cast<int>(columns_matrix.size());
  if (n != 2 && n != 3) throw std::invalid_argument("lattice rank must be 2 or 3");
  std::size_t k = columns_matrix.front().size();
  for (const auto& row : columns_matrix) {
    if (row.size() != k) throw std::invalid_argument("lattice matrix rows have unequal lengths");
  }
  if (k < static_cast<std::size_t>(n)) {
    throw std::invalid_argument("lattice matrix needs at least as many columns as rows");
  }
  long p = checked_prime(columns_matrix);

  long vmin = kValClamp;
  long absmin = kValClamp;
  for (const auto& row : columns_matrix) {
    for (const auto& e : row) {
      absmin = std::min(absmin, scalar_abs_precision(e));
      if (!e.zero) vmin = std::min(vmin, e.val);
    }
  }
  if (vmin == kValClamp) {
    throw std::invalid_argument("lattice matrix is zero; cannot form a class");
  }
  long window = std::min(absmin - vmin, kMaxHnfWindow);
  if (window < kPadicMinPrecision) {
    throw std::runtime_error("lattice entries leave a digit window of only " +
                             std::to_string(window) + "; increase the working precision");
  }
  Int mod = int_pow(p, window);
  std::vector<std::vector<Int>> cols(k, std::vector<Int>(n, 0));
  for (int i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const PadicScalar& e = columns_matrix[i][j];
      if (e.zero) continue;
      long sv = e.val - vmin;
      if (sv >= window) continue;
      cols[j][i] = e.unit % int_pow(p, window - sv) * int_pow(p, sv) % mod;
    }
  }
  HnfCore core = hnf_core(p, n, std::move(cols), window);
  long cert = window - core.debt;
  long max_diag = *std::max_element(core.diag.begin(), core.diag.end());
  if (cert < kPadicMinPrecision || cert < max_diag) {
    throw std::runtime_error("lattice normal form certified only " + std::to_string(cert) +
                             " digits, need at least " +
                             std::to_string(std::max<long>(kPadicMinPrecision, max_diag)) +
                             "; increase the working precision");
  }
  LatticeClass L;
  L.prime = p;
  L.n = n;
  L.diag = core.diag;
  L.upper.assign(n, std::vector<Int>(n, 0));
  long content = *std::min_element(core.diag.begin(), core.diag.end());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) {
      Int e = core.cols[j][i] % int_pow(p, L.diag[i]);
      L.upper[i][j] = e;
      if (e != 0) content = std::min(content, int_valuation(e, p, window));
    }
  }
  if (content != 0) {
    throw std::logic_error("lattice normal form lost primitivity (content " +
                           std::to_string(content) + ")");
  }
  L.prec = static_cast<int>(cert);
  return L;
}

namespace {

/// Width at which a canonical class is re-lifted to exact scalars.  Canonical
/// data are exact integers, so any width is sound; make it generous enough
/// that one more normalization round keeps a full certified window.
long exact_lift_width(const LatticeClass& L) {
  long span = 0;
  for (long d : L.diag) span += std::abs(d);
  return std::max<long>(L.prec, 4 * span + 8L * L.n + 64);
}

}  // namespace

PadicMatrix lattice_matrix(const LatticeClass& L) {
  long lift = exact_lift_width(L);
  PadicMatrix m(L.n, std::vector<PadicScalar>(L.n, padic_zero(L.prime)));
  for (int i = 0; i < L.n; ++i) {
    m[i][i] = padic_shift(exact_int_scalar(L.prime, 1, lift), L.diag[i]);
    for (int j = i + 1; j < L.n; ++j) {
      if (L.upper[i][j] != 0) {
        m[i][j] = exact_int_scalar(L.prime, L.upper[i][j], lift);
      }
    }
  }
  return m;
}

std::string lattice_key(const LatticeClass& L) {
  std::ostringstream os;
  os << L.prime << "|" << L.n;
  for (long d : L.diag) os << "|" << d;
  for (int i = 0; i < L.n; ++i) {
    for (int j = i + 1; j < L.n; ++j) os << "|" << L.upper[i][j].str();
  }
  return os.str();
}

bool lattice_eq(const LatticeClass& a, const LatticeClass& b) {
  return a.prime == b.prime && a.n == b.n && lattice_key(a) == lattice_key(b);
}

namespace {

std::string digit_string(Int value, long p, long count) {
  std::string out;
  for (long i = 0; i < count; ++i) {
    out.push_back(static_cast<char>('0' + static_cast<int>(value % p)));
    value /= p;
  }
  return out;
}

Int digits_to_int(const std::string& s, long p) {
  Int out = 0;
  Int scale = 1;
  for (char c : s) {
    int d = c - '0';
    if (d < 0 || d >= p) throw std::invalid_argument("invalid digit string");
    out += scale * d;
    scale *= p;
  }
  return out;
}

}  // namespace

nlohmann::ordered_json lattice_json(const LatticeClass& L) {
  nlohmann::ordered_json j;
  j["schema"] = "lattice/1";
  j["p"] = L.prime;
  j["n"] = L.n;
  j["diag"] = L.diag;
  nlohmann::ordered_json upper = nlohmann::ordered_json::array();
  for (int i = 0; i < L.n; ++i) {
    for (int k = i + 1; k < L.n; ++k) {
      nlohmann::ordered_json e;
      e["row"] = i;
      e["col"] = k;
      e["digits"] = digit_string(L.upper[i][k], L.prime, L.diag[i]);
      upper.push_back(e);
    }
  }
  j["upper"] = upper;
  j["prec"] = L.prec;
  return j;
}

LatticeClass lattice_from_json(const nlohmann::json& j) {
  if (j.at("schema").get<std::string>() != "lattice/1") {
    throw std::invalid_argument("unexpected lattice schema");
  }
  LatticeClass L;
  L.prime = j.at("p").get<long>();
  L.n = j.at("n").get<int>();
  L.diag = j.at("diag").get<std::vector<long>>();
  L.upper.assign(L.n, std::vector<Int>(L.n, 0));
  for (const auto& e : j.at("upper")) {
    L.upper[e.at("row").get<int>()][e.at("col").get<int>()] =
        digits_to_int(e.at("digits").get<std::string>(), L.prime);
  }
  L.prec = j.at("prec").get<int>();
  return L;
}

// ----------------------------------------------------------------------------
// Relative position and distances.
// ----------------------------------------------------------------------------

RelPosition relative_position(const LatticeClass& a, const LatticeClass& b) {
  if (a.prime != b.prime || a.n != b.n) {
    throw std::invalid_argument("relative position needs classes of matching prime and rank");
  }
  int n = a.n;
  PadicMatrix ba = lattice_matrix(a);
  PadicMatrix bb = lattice_matrix(b);
  PadicMatrix t(n, std::vector<PadicScalar>(n, padic_zero(a.prime)));
  for (int c = 0; c < n; ++c) {
    for (int i = n - 1; i >= 0; --i) {
      PadicScalar acc = bb[i][c];
      for (int j = i + 1; j < n; ++j) {
        acc = padic_sub(acc, padic_mul(ba[i][j], t[j][c]));
      }
      t[i][c] = padic_shift(acc, -a.diag[i]);
    }
  }
  std::vector<PadicScalar> entries;
  for (const auto& row : t) entries.insert(entries.end(), row.begin(), row.end());
  long d1 = certified_min_valuation(entries, "the transition entries");
  long d3 = std::accumulate(b.diag.begin(), b.diag.end(), 0L) -
            std::accumulate(a.diag.begin(), a.diag.end(), 0L);
  RelPosition out;
  if (n == 2) {
    out.exp = {d3 - d1, d1};
  } else {
    long d2 = certified_min_valuation(two_by_two_minors(t), "the transition minors");
    out.exp = {d3 - d2, d2 - d1, d1};
  }
  for (std::size_t i = 0; i + 1 < out.exp.size(); ++i) {
    if (out.exp[i] < out.exp[i + 1]) {
      throw std::logic_error("elementary divisor exponents came out unsorted; "
                             "precision artifact in the transition");
    }
  }
  return out;
}

double cat0_distance(const LatticeClass& a, const LatticeClass& b) {
  RelPosition r = relative_position(a, b);
  double mean = 0;
  for (long e : r.exp) mean += static_cast<double>(e);
  mean /= static_cast<double>(r.exp.size());
  double s = 0;
  for (long e : r.exp) {
    double d = static_cast<double>(e) - mean;
    s += d * d;
  }
  return std::sqrt(s);
}

long comb_distance_formula(const LatticeClass& a, const LatticeClass& b) {
  RelPosition r = relative_position(a, b);
  return r.exp.front() - r.exp.back();
}

std::vector<LatticeClass> lattice_neighbors(const LatticeClass& L) {
  long p = L.prime;
  if (p > 31) throw std::invalid_argument("neighbor enumeration expects a small prime");
  int n = L.n;
  PadicMatrix b = lattice_matrix(L);
  int prec = static_cast<int>(exact_lift_width(L));

  std::vector<std::vector<int>> reps;  // projective representatives of F_p^n
  std::vector<int> v(n, 0);
  std::function<void(int)> rec = [&](int pos) {
    if (pos == n) {
      int lead = -1;
      for (int i = 0; i < n && lead < 0; ++i) {
        if (v[i] != 0) lead = i;
      }
      if (lead >= 0 && v[lead] == 1) reps.push_back(v);
      return;
    }
    for (int d = 0; d < p; ++d) {
      v[pos] = d;
      rec(pos + 1);
    }
    v[pos] = 0;
  };
  rec(0);

  auto column_combo = [&](const std::vector<int>& w) {
    std::vector<PadicScalar> col(n, padic_zero(p));
    for (int i = 0; i < n; ++i) {
      PadicScalar acc = padic_zero(p);
      for (int j = 0; j < n; ++j) {
        if (w[j] != 0) {
          acc = padic_add(acc, padic_mul(exact_int_scalar(p, w[j], prec), b[i][j]));
        }
      }
      col[i] = acc;
    }
    return col;
  };

  std::vector<LatticeClass> out;
  std::vector<std::string> seen;
  auto push = [&](const LatticeClass& M) {
    std::string key = lattice_key(M);
    for (const auto& s : seen) {
      if (s == key) return;
    }
    seen.push_back(key);
    out.push_back(M);
  };

  // Index-p sublattices: pL + one projective direction.
  for (const auto& w : reps) {
    PadicMatrix m(n, std::vector<PadicScalar>(n + 1, padic_zero(p)));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) m[i][j] = padic_shift(b[i][j], 1);
    }
    auto col = column_combo(w);
    for (int i = 0; i < n; ++i) m[i][n] = col[i];
    push(lattice_normal_form(m));
  }
  // Index-p^2 sublattices for rank 3: pL + a projective plane.
  if (n == 3) {
    for (const auto& w : reps) {
      std::vector<std::vector<int>> kernel;
      for (const auto& u : reps) {
        int dot = 0;
        for (int i = 0; i < n; ++i) dot += w[i] * u[i];
        if (dot % p == 0) kernel.push_back(u);
      }
      // Distinct projective representatives are automatically independent.
      if (kernel.size() < 2) throw std::logic_error("projective plane lost a basis");
      std::vector<int> u1 = kernel[0];
      std::vector<int> u2 = kernel[1];
      PadicMatrix m(n, std::vector<PadicScalar>(n + 2, padic_zero(p)));
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m[i][j] = padic_shift(b[i][j], 1);
      }
      auto c1 = column_combo(u1);
      auto c2 = column_combo(u2);
      for (int i = 0; i < n; ++i) {
        m[i][n] = c1[i];
        m[i][n + 1] = c2[i];
      }
      push(lattice_normal_form(m));
    }
  }
  return out;
}

long comb_distance_bfs(const LatticeClass& a, const LatticeClass& b, long cap) {
  if (cap <= 0) throw std::invalid_argument("BFS cap must be positive");
  std::string ka = lattice_key(a), kb = lattice_key(b);
  if (ka == kb) return 0;
  std::unordered_map<std::string, long> da{{ka, 0}}, db{{kb, 0}};
  std::vector<LatticeClass> fa{a}, fb{b};
  long ra = 0, rb = 0;
  long best = LONG_MAX;
  while (true) {
    if (best <= ra + rb) return best;
    if (ra + rb >= cap) {
      throw std::runtime_error("combinatorial distance exceeds the cap of " +
                               std::to_string(cap));
    }
    bool expand_a = fa.size() <= fb.size();
    auto& frontier = expand_a ? fa : fb;
    auto& mine = expand_a ? da : db;
    auto& other = expand_a ? db : da;
    long r = (expand_a ? ra : rb) + 1;
    std::vector<LatticeClass> next;
    for (const auto& v : frontier) {
      for (const auto& nb : lattice_neighbors(v)) {
        std::string k = lattice_key(nb);
        if (mine.count(k)) continue;
        mine.emplace(k, r);
        auto hit = other.find(k);
        if (hit != other.end()) best = std::min(best, r + hit->second);
        next.push_back(nb);
      }
    }
    frontier = std::move(next);
    (expand_a ? ra : rb) = r;
    if (frontier.empty() && best == LONG_MAX) {
      throw std::logic_error("BFS frontier emptied without contact");
    }
  }
}

// ----------------------------------------------------------------------------
// Tree layer.
// ----------------------------------------------------------------------------

TreeVertex tree_vertex(long p, long level, const PadicScalar& x, int prec) {
  if (x.prime != p) throw std::invalid_argument("translation prime mismatch");
  // Canonicalize first: the vertex only depends on x mod p^level, and the
  // canonical residue is a finite exact quantity, so it can be re-lifted at
  // whatever width the normal form needs (the translation's own window only
  // has to certify the residue itself).
  PadicScalar r = normalize_translation(level, x);
  int width = prec + static_cast<int>(std::labs(level)) +
              static_cast<int>(r.zero ? 0 : std::labs(r.val)) + 16;
  PadicScalar one = exact_int_scalar(p, 1, width);
  PadicScalar xr = r.zero ? PadicScalar(padic_zero(p))
                          : padic_shift(exact_int_scalar(p, r.unit, width), r.val);
  PadicMatrix rows = {{padic_shift(one, level), xr}, {padic_zero(p), one}};
  TreeVertex v;
  v.lattice = lattice_normal_form(rows);
  return v;
}

TreeVertex tree_base_vertex(long p, int prec) {
  TreeVertex v;
  v.lattice = base_lattice(p, 2, prec);
  return v;
}

TreeChart tree_chart(const TreeVertex& v) {
  const LatticeClass& L = v.lattice;
  if (L.n != 2) throw std::invalid_argument("tree charts are defined for rank-2 classes");
  TreeChart c;
  c.level = L.diag[0] - L.diag[1];
  if (L.upper[0][1] == 0) {
    c.x = padic_zero(L.prime);
  } else {
    c.x = padic_shift(padic_from_integer(L.prime, L.upper[0][1], L.prec), -L.diag[1]);
  }
  return c;
}

std::vector<TreeVertex> tree_neighbors(const TreeVertex& v) {
  std::vector<TreeVertex> out;
  for (auto& nb : lattice_neighbors(v.lattice)) {
    TreeVertex w;
    w.lattice = std::move(nb);
    out.push_back(std::move(w));
  }
  return out;
}

long tree_distance(const TreeVertex& a, const TreeVertex& b) {
  TreeChart ca = tree_chart(a), cb = tree_chart(b);
  long meet = std::min(ca.level, cb.level);
  PadicScalar diff = padic_sub(ca.x, cb.x);
  long vd = val_lower(diff);
  meet = std::min(meet, vd);
  return (ca.level - meet) + (cb.level - meet);
}

long tree_level(const TreeVertex& v) { return tree_chart(v).level; }

TreeVertex qi_self_embedding_tree(const TreeVertex& v) {
  if (v.lattice.prime != 2) {
    throw std::invalid_argument("the tree self-embedding is defined for p = 2");
  }
  TreeChart in = tree_chart(v);
  TreeChart out = phi_chart(in);
  int prec = std::max<int>(v.lattice.prec, kPadicDefaultPrecision);
  return tree_vertex(2, out.level, out.x, prec);
}

LatticeClass an_map_p(const TreeVertex& u, const TreeVertex& w) {
  return an_map_chart(tree_chart(u), tree_chart(w));
}

// ----------------------------------------------------------------------------
// Distances to apartments and sectors.
// ----------------------------------------------------------------------------

long apartment_distance(const LatticeClass& x, const PadicMatrix& frame) {
  ValuationShape s = shape_from_class(x, frame);
  return shape_distance(s);
}

long sector_distance(const LatticeClass& x, const PadicMatrix& frame,
                     const std::array<int, 3>& desc_order) {
  ValuationShape s = shape_from_class(x, frame);
  s.cone = true;
  s.order = desc_order;
  return shape_distance(s);
}

// ----------------------------------------------------------------------------
// Geodesics and the nonrigid pipeline.
// ----------------------------------------------------------------------------

namespace {

TreeChart geodesic_chart(long p, const TreeGeodesic& g, long u, int prec) {
  PadicScalar ea = padic_dyadic(p, g.a.num, g.a.den_exp, prec);
  PadicScalar eb = padic_dyadic(p, g.b.num, g.b.den_exp, prec);
  PadicScalar diff = padic_sub(ea, eb);
  if (diff.zero) throw std::invalid_argument("geodesic ends must be distinct");
  long meet = diff.val;
  long level = meet + std::labs(u);
  return make_chart(p, level, u >= 0 ? eb : ea);
}

}  // namespace

TreeVertex tree_geodesic_vertex(long p, const TreeGeodesic& g, long u, int prec) {
  TreeChart c = geodesic_chart(p, g, u, prec);
  return tree_vertex(p, c.level, c.x, prec);
}

std::pair<TreeGeodesic, TreeGeodesic> sample_tree_flat(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto draw_end = [&]() {
    TreeEnd e;
    e.den_exp = static_cast<long>(gen() & 1);
    e.num = 2 * static_cast<long>(gen() % 16) + 1;
    return e;
  };
  auto draw_geodesic = [&]() {
    for (int tries = 0; tries < 4096; ++tries) {
      TreeEnd a = draw_end();
      TreeEnd b = draw_end();
      long va = -a.den_exp, vb = -b.den_exp;
      long meet;
      if (va != vb) {
        meet = std::min(va, vb);
      } else {
        Int diff = a.num - b.num;
        if (diff == 0) continue;
        meet = va + int_valuation(diff < 0 ? Int(-diff) : diff, 2, 16);
      }
      if (meet > 2) continue;
      TreeGeodesic g;
      g.a = a;
      g.b = b;
      return g;
    }
    throw std::logic_error("failed to sample a tree geodesic");
  };
  return {draw_geodesic(), draw_geodesic()};
}

BuildingNonrigidReport building_nonrigid_report(const TreeGeodesic& g1, const TreeGeodesic& g2,
                                                const BuildingNonrigidOptions& options) {
  long p = 2;
  long maxR = *std::max_element(options.radii.begin(), options.radii.end());
  int prec = options.prec > 0
                 ? options.prec
                 : static_cast<int>(8 * std::max(maxR, 2 * options.flag_horizon) + 96);
  auto axis = [&](const TreeGeodesic& g) {
    return [&, g](long u) { return phi_chart(geodesic_chart(p, g, u, prec)); };
  };
  return run_flat_pipeline(p, axis(g1), axis(g2), options);
}

BuildingNonrigidReport building_anmap_baseline(const PadicScalar& x0, const PadicScalar& z0,
                                               const BuildingNonrigidOptions& options) {
  long p = x0.prime;
  if (z0.prime != p) throw std::invalid_argument("baseline translations mix primes");
  long maxR = *std::max_element(options.radii.begin(), options.radii.end());
  int prec = options.prec > 0
                 ? options.prec
                 : static_cast<int>(8 * std::max(maxR, 2 * options.flag_horizon) + 96);
  auto axis = [&](const PadicScalar& x) {
    PadicScalar wide = lift_exact(x, prec);
    return [wide, p](long u) { return make_chart(p, u, wide); };
  };
  return run_flat_pipeline(p, axis(x0), axis(z0), options);
}

nlohmann::ordered_json building_report_json(const BuildingNonrigidReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = "building-nonrigid/1";
  j["raw_flags"] = report.raw_flags;
  nlohmann::ordered_json flags = nlohmann::ordered_json::array();
  for (const auto& f : report.flags) {
    nlohmann::ordered_json e;
    nlohmann::ordered_json line = nlohmann::ordered_json::array();
    nlohmann::ordered_json nrm = nlohmann::ordered_json::array();
    for (int i = 0; i < 3; ++i) {
      line.push_back(padic_to_string(f.line[i]));
      nrm.push_back(padic_to_string(f.plane_normal[i]));
    }
    e["line"] = line;
    e["plane_normal"] = nrm;
    e["ray_exponents"] = f.ray_exponents;
    e["depth"] = f.depth;
    flags.push_back(e);
  }
  j["flags"] = flags;
  j["common_frame"] = report.common_frame;
  j["frame_margin"] = report.frame_margin;
  j["radii"] = report.radii;
  j["union_sup"] = report.union_sup;
  j["apartment_floor"] = report.apartment_floor;
  j["candidate_count"] = report.candidate_count;
  return j;
}

// ----------------------------------------------------------------------------
// Exhaustive embedding certificate over a ball (fast integer path for the
// pair loop; the charts themselves come from the library map).
// ----------------------------------------------------------------------------

TreeEmbeddingCheck certify_tree_embedding(long radius, double l, double c) {
  if (radius < 1 || radius > 16) {
    throw std::invalid_argument("embedding certificate radius must be in [1, 16]");
  }
  if (l < 1.0) throw std::invalid_argument("multiplicative bound must be >= 1");
  const long R = radius;
  struct Node {
    long m;             // source level
    long long n;        // source translation numerator over 2^R
    long im;            // image level
    long long in;       // image translation (integer)
  };
  std::vector<Node> nodes;
  int prec = static_cast<int>(2 * R + 32);
  for (long m = -R; m <= R; ++m) {
    long long span = 1LL << (m + R);
    for (long long n = 0; n < span; ++n) {
      long v = n == 0 ? kValClamp : static_cast<long>(__builtin_ctzll(static_cast<unsigned long long>(n))) - R;
      long meet = std::min({0L, m, v});
      long d = m - 2 * meet;
      if (d > R) continue;
      PadicScalar x = n == 0 ? padic_zero(2, m)
                             : padic_dyadic(2, Int(n), R, prec);
      TreeChart img = phi_chart(make_chart(2, m, x));
      long long in = img.x.zero ? 0
                                : static_cast<long long>(padic_residue(img.x, img.level)
                                                             .convert_to<long long>());
      nodes.push_back(Node{m, n, img.level, in});
    }
  }
  TreeEmbeddingCheck out;
  out.radius = R;
  out.vertices = static_cast<long>(nodes.size());
  out.min_image_level = LONG_MAX;
  for (const auto& nd : nodes) out.min_image_level = std::min(out.min_image_level, nd.im);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      const Node& a = nodes[i];
      const Node& b = nodes[j];
      long long dn = a.n - b.n;
      long vs = dn == 0 ? kValClamp
                        : static_cast<long>(__builtin_ctzll(static_cast<unsigned long long>(
                              dn < 0 ? -dn : dn))) - R;
      long ms = std::min({a.m, b.m, vs});
      long ds = (a.m - ms) + (b.m - ms);
      long long di = a.in - b.in;
      long vi = di == 0 ? kValClamp
                        : static_cast<long>(__builtin_ctzll(static_cast<unsigned long long>(
                              di < 0 ? -di : di)));
      long mi = std::min({a.im, b.im, static_cast<long>(vi)});
      long dimg = (a.im - mi) + (b.im - mi);
      ++out.pairs;
      double upper = static_cast<double>(dimg) - (l * static_cast<double>(ds) + c);
      double lower = static_cast<double>(ds) / l - c - static_cast<double>(dimg);
      if (upper > 0) {
        ++out.upper_violations;
      }
      if (lower > 0) {
        ++out.lower_violations;
      }
      out.max_upper_excess = std::max(out.max_upper_excess, upper);
      out.max_lower_excess = std::max(out.max_lower_excess, lower);
    }
  }
  return out;
}

}  // namespace qie
