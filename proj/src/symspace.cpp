#include "qie/symspace.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "qie/sampling.hpp"

namespace qie {

namespace {

using Cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Mat3 = Eigen::Matrix3cd;
using Vec3c = Eigen::Vector3cd;

constexpr double kPi = 3.14159265358979323846264338;
constexpr double kSqrt2 = 1.41421356237309504880168872;

bool finite_matrix(const Eigen::MatrixXcd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

double log_singular_norm(const Eigen::MatrixXcd& m) {
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    const double s = std::max(svd.singularValues()(i), 1e-300);
    const double l = std::log(s);
    acc += l * l;
  }
  return std::sqrt(acc);
}

double dist_gl3(const Mat3& rel) {
  const Eigen::JacobiSVD<Mat3> svd(rel);
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double s = std::max(svd.singularValues()(i), 1e-300);
    const double l = std::log(s);
    acc += l * l;
  }
  return std::sqrt(acc);
}

double herm_angle(const Vec3c& a, const Vec3c& b) {
  return std::acos(std::min(1.0, std::abs(a.dot(b))));
}

/// Hermitian-orthogonal normal of span{a, b}.
Vec3c plane_normal_of(const Vec3c& a, const Vec3c& b) { return a.cross(b).conjugate(); }

/// Hermitian-orthogonal intersection line of the planes with normals n1, n2.
Vec3c plane_intersection(const Vec3c& n1, const Vec3c& n2) {
  return n1.conjugate().cross(n2.conjugate());
}

Mat2 cayley_rotation() {
  Mat2 c;
  const Cplx i(0.0, 1.0);
  c << Cplx(1.0, 0.0), -i, Cplx(1.0, 0.0), i;
  return c / Cplx(1.0, 1.0);  // determinant 1
}

SymPoint an_build(double t, Cplx x, double s, Cplx z, bool complex_field) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(3, 3);
  const double e1 = std::exp((2.0 / 3.0) * (t + s));
  const double e2 = std::exp((2.0 / 3.0) * (s - 2.0 * t));
  const double e3 = std::exp((2.0 / 3.0) * (t - 2.0 * s));
  m(0, 0) = e1;
  m(0, 1) = x * e2;
  m(0, 2) = z * e3;
  m(1, 1) = e2;
  m(2, 2) = e3;
  return make_sym_point(std::move(m), complex_field);
}

/// Coset representative adapted to xi: the ray rep * exp(tau H) is asymptotic
/// to xi.  For xi2 the upper-triangular rep already qualifies; for xi1 a
/// unitary Givens rotation in columns (2,3) clears the (2,3) entry.
Mat3 xi_adapted(const SymPoint& p, const BoundaryPointSpec& xi) {
  Mat3 h = p.rep;
  if (xi.label == "xi2") return h;
  if (xi.label != "xi1") throw std::invalid_argument("unknown boundary point label: " + xi.label);
  const double a = h(1, 1).real();  // positive real by the SymPoint invariant
  const Cplx b = h(1, 2);
  if (std::abs(b) == 0.0) return h;
  const double r = std::sqrt(a * a + std::norm(b));
  const Cplx c = a / r;
  const Cplx s = std::conj(b) / r;
  Mat3 g = Mat3::Identity();
  g(1, 1) = c;
  g(1, 2) = -std::conj(s);
  g(2, 1) = s;
  g(2, 2) = std::conj(c);
  return h * g;
}

struct BoxMinimum {
  double value = 0.0;
  double t1 = 0.0, t2 = 0.0;
};

/// Minimum of d(exp(-t1 H) A exp(t2 H)) over [0, box]^2, assuming joint
/// convexity (distance between two geodesics): coarse grid plus nested
/// window refinement around the incumbent.
BoxMinimum min_ray_distance(const Mat3& a, const Eigen::Vector3d& gen, double box,
                            int coarse_steps, int refine_levels) {
  const auto eval = [&](double t1, double t2) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        m(i, j) = a(i, j) * std::exp(-t1 * gen(i) + t2 * gen(j));
    return dist_gl3(m);
  };
  BoxMinimum best;
  best.value = std::numeric_limits<double>::infinity();
  const int n = std::max(coarse_steps, 4);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const double t1 = box * i / n, t2 = box * j / n;
      const double v = eval(t1, t2);
      if (v < best.value) best = {v, t1, t2};
    }
  double window = 2.0 * box / n;
  for (int level = 0; level < refine_levels; ++level) {
    const double lo1 = std::max(0.0, best.t1 - window), hi1 = std::min(box, best.t1 + window);
    const double lo2 = std::max(0.0, best.t2 - window), hi2 = std::min(box, best.t2 + window);
    for (int i = 0; i <= 8; ++i)
      for (int j = 0; j <= 8; ++j) {
        const double t1 = lo1 + (hi1 - lo1) * i / 8.0;
        const double t2 = lo2 + (hi2 - lo2) * j / 8.0;
        const double v = eval(t1, t2);
        if (v < best.value) best = {v, t1, t2};
      }
    window *= 0.55;
  }
  return best;
}

double golden_minimize(double lo, double hi, const std::function<double(double)>& f,
                       int iters, double* out_min) {
  const double phi = 0.6180339887498949;
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < iters; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = f(x2);
    }
  }
  if (f1 <= f2) {
    if (out_min) *out_min = f1;
    return x1;
  }
  if (out_min) *out_min = f2;
  return x2;
}

/// Distance from a point to the flat {T0 Q exp(diag(a))}, a sum-zero, given
/// B = X^{-1} T0 Q.  Coordinate descent in the sum-zero chart
/// a = a1 (1,-1,0) + a2 (0,1,-1); the objective is convex.
double flat_distance_from(const Mat3& b, int sweeps, int golden_steps) {
  const auto eval = [&](double a1, double a2) {
    Mat3 m = b;
    const double d0 = std::exp(a1), d1 = std::exp(a2 - a1), d2 = std::exp(-a2);
    m.col(0) *= d0;
    m.col(1) *= d1;
    m.col(2) *= d2;
    return dist_gl3(m);
  };
  double a1 = 0.0, a2 = 0.0;
  double best = eval(a1, a2);
  double window = 2.0 * best + 2.0;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    a1 = golden_minimize(a1 - window, a1 + window,
                         [&](double v) { return eval(v, a2); }, golden_steps, nullptr);
    a2 = golden_minimize(a2 - window, a2 + window,
                         [&](double v) { return eval(a1, v); }, golden_steps, nullptr);
    best = std::min(best, eval(a1, a2));
    window *= 0.5;
  }
  return best;
}

using FlatMap = std::function<Mat3(double, double)>;

H2Point semicircle_point(double center, double radius, double u) {
  const double s = kSqrt2 * u;
  const double as = std::abs(s);
  const double logcosh = as + std::log1p(std::exp(-2.0 * as)) - std::log(2.0);
  return H2Point{0.5 * (std::log(radius) - logcosh), center + radius * std::tanh(s)};
}

std::vector<FlagEstimate> estimate_flags(const FlatMap& flat, const NonrigidOptions& opt) {
  std::vector<FlagEstimate> flags;
  const double alphas[2] = {kPi / 8.0, 3.0 * kPi / 8.0};
  for (const double e1 : {1.0, -1.0})
    for (const double e2 : {1.0, -1.0})
      for (const double alpha : alphas) {
        const double u1 = e1 * std::cos(alpha) * opt.flag_horizon;
        const double u2 = e2 * std::sin(alpha) * opt.flag_horizon;
        const Mat3 m = flat(u1, u2);
        const Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU);
        FlagEstimate f;
        f.frame = svd.matrixU();
        f.line = f.frame.col(0);
        f.plane_normal = f.frame.col(2);
        const auto& sv = svd.singularValues();
        f.top_gap = sv(0) / std::max(sv(1), 1e-300);
        f.mid_gap = sv(1) / std::max(sv(2), 1e-300);
        f.rank_ok = f.top_gap >= opt.rank_gap_min && f.mid_gap >= opt.rank_gap_min;
        flags.push_back(std::move(f));
      }
  return flags;
}

std::vector<FlagEstimate> dedup_flags(const std::vector<FlagEstimate>& raw, double tol) {
  std::vector<FlagEstimate> kept;
  for (const auto& f : raw) {
    if (!f.rank_ok) continue;
    bool dup = false;
    for (const auto& g : kept)
      if (herm_angle(f.line, g.line) < tol && herm_angle(f.plane_normal, g.plane_normal) < tol) {
        dup = true;
        break;
      }
    if (!dup) kept.push_back(f);
  }
  return kept;
}

struct FrameVerdict {
  bool found = false;
  double margin = 0.0;
};

/// Does one triple of independent lines explain every flag (its line among
/// the three, its plane among the pair spans)?  Candidate lines: the flag
/// lines themselves plus pairwise plane intersections.
FrameVerdict common_frame_test(const std::vector<FlagEstimate>& flags, double frame_tol) {
  std::vector<Vec3c> pool;
  const auto add_line = [&](Vec3c v) {
    const double n = v.norm();
    if (n < 1e-9) return;
    v /= n;
    for (const auto& w : pool)
      if (herm_angle(v, w) < 1e-6) return;
    pool.push_back(v);
  };
  for (const auto& f : flags) add_line(f.line);
  for (std::size_t i = 0; i < flags.size(); ++i)
    for (std::size_t j = i + 1; j < flags.size(); ++j)
      add_line(plane_intersection(flags[i].plane_normal, flags[j].plane_normal));

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j)
      for (std::size_t k = j + 1; k < pool.size(); ++k) {
        Mat3 basis;
        basis.col(0) = pool[i];
        basis.col(1) = pool[j];
        basis.col(2) = pool[k];
        if (std::abs(basis.determinant()) < 1e-4) continue;
        Vec3c normals[3] = {plane_normal_of(pool[i], pool[j]).normalized(),
                            plane_normal_of(pool[i], pool[k]).normalized(),
                            plane_normal_of(pool[j], pool[k]).normalized()};
        double cover = 0.0;
        for (const auto& f : flags) {
          double cl = std::numeric_limits<double>::infinity();
          for (const auto& l : {pool[i], pool[j], pool[k]})
            cl = std::min(cl, herm_angle(f.line, l));
          double cp = std::numeric_limits<double>::infinity();
          for (const auto& nn : normals) cp = std::min(cp, herm_angle(f.plane_normal, nn));
          cover = std::max(cover, std::max(cl, cp));
        }
        best = std::min(best, cover);
      }
  if (!std::isfinite(best)) return {false, kPi / 2.0};
  return {best < frame_tol, best};
}

std::vector<Mat3> candidate_frames(const std::vector<FlagEstimate>& flags,
                                   const NonrigidOptions& opt) {
  std::vector<Mat3> out;
  out.push_back(Mat3::Identity());
  for (const auto& f : flags) out.push_back(f.frame);
  std::mt19937_64 gen(opt.candidate_seed);
  for (int k = 0; k < opt.candidate_random; ++k) {
    Mat3 g;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g(i, j) = Cplx(unit_normal(gen), unit_normal(gen));
    const Eigen::HouseholderQR<Mat3> qr(g);
    out.push_back(Mat3(qr.householderQ()));
  }
  return out;
}

/// Precomputed one-parameter unitary subgroups along a Hermitian basis of
/// traceless directions (used for local frame refinement).
struct UnitaryDirection {
  Eigen::Matrix3cd vectors;
  Eigen::Vector3d eigenvalues;
  Mat3 at(double theta) const {
    Vec3c phases;
    for (int i = 0; i < 3; ++i) phases(i) = std::exp(Cplx(0.0, theta * eigenvalues(i)));
    return vectors * phases.asDiagonal() * vectors.adjoint();
  }
};

const std::vector<UnitaryDirection>& refinement_directions() {
  static const std::vector<UnitaryDirection> dirs = [] {
    std::vector<Mat3> gens;
    const Cplx i(0.0, 1.0);
    const auto h = [](std::initializer_list<Cplx> entries) {
      Mat3 m;
      int k = 0;
      for (const Cplx& e : entries) m(k / 3, k % 3) = e, ++k;
      return m;
    };
    gens.push_back(h({0, 1, 0, 1, 0, 0, 0, 0, 0}));
    gens.push_back(h({0, -i, 0, i, 0, 0, 0, 0, 0}));
    gens.push_back(h({1, 0, 0, 0, -1, 0, 0, 0, 0}));
    gens.push_back(h({0, 0, 1, 0, 0, 0, 1, 0, 0}));
    gens.push_back(h({0, 0, -i, 0, 0, 0, i, 0, 0}));
    gens.push_back(h({0, 0, 0, 0, 0, 1, 0, 1, 0}));
    gens.push_back(h({0, 0, 0, 0, 0, -i, 0, i, 0}));
    gens.push_back(h({1, 0, 0, 0, 1, 0, 0, 0, -2}));
    std::vector<UnitaryDirection> out;
    for (const auto& g : gens) {
      const Eigen::SelfAdjointEigenSolver<Mat3> es(g);
      out.push_back({es.eigenvectors(), es.eigenvalues()});
    }
    return out;
  }();
  return dirs;
}

struct CloudPoint {
  Mat3 inv;  // inverse of the image representative
};

std::vector<CloudPoint> image_cloud(const FlatMap& flat, double radius,
                                    const NonrigidOptions& opt) {
  std::vector<CloudPoint> cloud;
  const auto push = [&](double u1, double u2) {
    cloud.push_back({flat(u1, u2).inverse().eval()});
  };
  push(0.0, 0.0);
  for (int j = 0; j < opt.cloud_ring; ++j) {
    const double phi = 2.0 * kPi * (j + 0.5) / opt.cloud_ring;
    push(radius * std::cos(phi), radius * std::sin(phi));
  }
  for (int j = 0; j < opt.cloud_inner; ++j) {
    const double phi = 2.0 * kPi * (j + 0.25) / opt.cloud_inner;
    push(0.6 * radius * std::cos(phi), 0.6 * radius * std::sin(phi));
  }
  return cloud;
}

double cloud_flat_distance(const std::vector<CloudPoint>& cloud, const Mat3& t0,
                           const Mat3& frame, const NonrigidOptions& opt,
                           std::size_t stride = 1) {
  double worst = 0.0;
  for (std::size_t idx = 0; idx < cloud.size(); idx += stride) {
    const Mat3 b = cloud[idx].inv * t0 * frame;
    worst = std::max(worst, flat_distance_from(b, opt.descent_sweeps, opt.golden_steps));
  }
  return worst;
}

double best_flat_distance(const std::vector<CloudPoint>& cloud, const Mat3& t0,
                          const std::vector<Mat3>& candidates, const NonrigidOptions& opt) {
  double best = std::numeric_limits<double>::infinity();
  Mat3 best_frame = Mat3::Identity();
  for (const auto& q : candidates) {
    const double h = cloud_flat_distance(cloud, t0, q, opt);
    if (h < best) {
      best = h;
      best_frame = q;
    }
  }
  // Local refinement of the winning frame on a subsampled cloud; kept only
  // if it also wins on the full cloud.
  const std::size_t stride = std::max<std::size_t>(1, cloud.size() / std::max(1, opt.refine_cloud));
  Mat3 q = best_frame;
  double window = 0.4;
  for (int sweep = 0; sweep < opt.refine_sweeps; ++sweep) {
    for (const auto& dir : refinement_directions()) {
      const auto eval = [&](double theta) {
        return cloud_flat_distance(cloud, t0, q * dir.at(theta), opt, stride);
      };
      double fmin = 0.0;
      const double theta = golden_minimize(-window, window, eval, opt.refine_steps, &fmin);
      q = q * dir.at(theta);
    }
    window *= 0.5;
  }
  best = std::min(best, cloud_flat_distance(cloud, t0, q, opt));
  return best;
}

NonrigidFlatReport flat_pipeline(const FlatMap& flat, const NonrigidOptions& opt) {
  NonrigidFlatReport report;
  const auto raw = estimate_flags(flat, opt);
  report.raw_flags = raw.size();
  report.flags = dedup_flags(raw, opt.dedup_angle);
  const FrameVerdict verdict = common_frame_test(report.flags, opt.frame_tol);
  report.common_frame = verdict.found;
  report.frame_margin = verdict.margin;
  const Mat3 t0 = flat(0.0, 0.0);
  const auto candidates = candidate_frames(report.flags, opt);
  report.radii = opt.radii;
  for (const double r : opt.radii) {
    const auto cloud = image_cloud(flat, r, opt);
    report.flat_distance.push_back(best_flat_distance(cloud, t0, candidates, opt));
  }
  // Least-squares slope of flat distance against radius.
  const std::size_t m = report.radii.size();
  if (m >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
      sx += report.radii[i];
      sy += report.flat_distance[i];
      sxx += report.radii[i] * report.radii[i];
      sxy += report.radii[i] * report.flat_distance[i];
    }
    report.growth_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return report;
}

}  // namespace

// ============================================================
// SymPoint basics
// ============================================================

SymPoint make_sym_point(Eigen::MatrixXcd upper, bool complex_field) {
  const Eigen::Index n = upper.rows();
  if (n != upper.cols() || (n != 2 && n != 3))
    throw std::invalid_argument("expected a square 2x2 or 3x3 representative");
  if (!finite_matrix(upper)) throw std::invalid_argument("non-finite entries in representative");
  const double scale = std::max(1.0, upper.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j < i && std::abs(upper(i, j)) > 1e-9 * scale)
        throw std::invalid_argument("representative is not upper triangular");
      if (j < i) upper(i, j) = 0.0;
      if (!complex_field && std::abs(upper(i, j).imag()) > 1e-9 * scale)
        throw std::invalid_argument("real-mode representative has imaginary entries");
      if (!complex_field) upper(i, j) = Cplx(upper(i, j).real(), 0.0);
    }
  double det = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(upper(i, i).imag()) > 1e-9 * std::abs(upper(i, i)))
      throw std::invalid_argument("diagonal of representative must be real");
    const double d = upper(i, i).real();
    if (!(d > 0.0)) throw std::invalid_argument("diagonal of representative must be positive");
    upper(i, i) = Cplx(d, 0.0);
    det *= d;
  }
  if (!(det > 0.0) || !std::isfinite(det))
    throw std::invalid_argument("representative determinant out of range");
  upper *= std::pow(det, -1.0 / static_cast<double>(n));
  SymPoint p;
  p.n = static_cast<int>(n);
  p.complex_field = complex_field;
  p.rep = std::move(upper);
  return p;
}

SymPoint iwasawa_point(const Eigen::MatrixXcd& g, bool complex_field) {
  if (g.rows() != g.cols()) throw std::invalid_argument("expected a square matrix");
  if (!finite_matrix(g)) throw std::invalid_argument("non-finite entries");
  const Eigen::MatrixXcd inv = g.inverse();
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(inv);
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  Eigen::MatrixXcd h = r.inverse();
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    const Cplx rii = r(i, i);
    const Cplx phase = rii / std::abs(rii);
    h.col(i) *= phase;
  }
  return make_sym_point(std::move(h), complex_field);
}

SymPoint sym_identity(int n, bool complex_field) {
  return make_sym_point(Eigen::MatrixXcd::Identity(n, n), complex_field);
}

SymPoint sym_translate(const SymPoint& g, const SymPoint& p) {
  if (g.n != p.n || g.complex_field != p.complex_field)
    throw std::invalid_argument("translation requires matching (n, field)");
  return make_sym_point(g.rep * p.rep, g.complex_field);
}

double dist_sym(const SymPoint& p, const SymPoint& q) {
  if (p.n != q.n || p.complex_field != q.complex_field)
    throw std::invalid_argument("distance requires matching (n, field)");
  const Eigen::MatrixXcd rel = p.rep.triangularView<Eigen::Upper>().solve(q.rep);
  return log_singular_norm(rel);
}

// ============================================================
// Hyperbolic charts
// ============================================================

SymPoint h2_rep(const H2Point& p) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
  m(0, 0) = std::exp(p.t);
  m(0, 1) = p.x * std::exp(-p.t);
  m(1, 1) = std::exp(-p.t);
  return make_sym_point(std::move(m), false);
}

SymPoint h3_rep(const H3Point& p) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
  m(0, 0) = std::exp(p.t);
  m(0, 1) = p.z * std::exp(-p.t);
  m(1, 1) = std::exp(-p.t);
  return make_sym_point(std::move(m), true);
}

H3Point h3_coords(const SymPoint& p) {
  if (p.n != 2) throw std::invalid_argument("h3_coords expects a rank-one point (n = 2)");
  const double et = p.rep(0, 0).real();
  return H3Point{std::log(et), p.rep(0, 1) * et};
}

double dist_h2(const H2Point& a, const H2Point& b) {
  const double ya = std::exp(2.0 * a.t), yb = std::exp(2.0 * b.t);
  const double dx = a.x - b.x, dy = ya - yb;
  return std::acosh(1.0 + (dx * dx + dy * dy) / (2.0 * ya * yb)) / kSqrt2;
}

double dist_h3(const H3Point& a, const H3Point& b) {
  const double ya = std::exp(2.0 * a.t), yb = std::exp(2.0 * b.t);
  const double dz = std::abs(a.z - b.z), dy = ya - yb;
  return std::acosh(1.0 + (dz * dz + dy * dy) / (2.0 * ya * yb)) / kSqrt2;
}

// ============================================================
// The explicit embedding and its composition
// ============================================================

SymPoint an_map(const H2Point& first, const H2Point& second) {
  return an_build(first.t, Cplx(first.x, 0.0), second.t, Cplx(second.x, 0.0), false);
}

SymPoint an_map(const H3Point& first, const H3Point& second) {
  return an_build(first.t, first.z, second.t, second.z, true);
}

SymPoint embed_h2_in_h3(const H2Point& p) {
  const Eigen::MatrixXcd g = cayley_rotation() * h2_rep(p).rep;
  return iwasawa_point(g, true);
}

SymPoint nonrigid_map(const H2Point& first, const H2Point& second) {
  return an_map(h3_coords(embed_h2_in_h3(first)), h3_coords(embed_h2_in_h3(second)));
}

// ============================================================
// Boundary rays and asymptote distances
// ============================================================

BoundaryPointSpec BoundaryPointSpec::xi1() {
  return {"xi1", Eigen::Vector3d(2.0 / 3.0, -4.0 / 3.0, 2.0 / 3.0)};
}

BoundaryPointSpec BoundaryPointSpec::xi2() {
  return {"xi2", Eigen::Vector3d(2.0 / 3.0, 2.0 / 3.0, -4.0 / 3.0)};
}

double BoundaryPointSpec::speed() const { return generator.norm(); }

AsymptoteResult asymptote_distance(const SymPoint& p, const SymPoint& q,
                                   const BoundaryPointSpec& xi,
                                   const AsymptoteOptions& options) {
  if (p.n != 3 || q.n != 3 || p.complex_field != q.complex_field)
    throw std::invalid_argument("asymptote distance requires two rank-two points");
  if (!(options.horizon > 0.0) || !(options.tol > 0.0))
    throw std::invalid_argument("horizon and tol must be positive");
  const Mat3 hp = xi_adapted(p, xi);
  const Mat3 hq = xi_adapted(q, xi);
  const Mat3 rel = hp.inverse() * hq;
  const BoxMinimum full = min_ray_distance(rel, xi.generator, options.horizon,
                                           options.coarse_steps, options.refine_levels);
  const BoxMinimum part = min_ray_distance(rel, xi.generator, 0.75 * options.horizon,
                                           options.coarse_steps, options.refine_levels);
  AsymptoteResult result;
  result.value = full.value;
  result.plateau_delta = std::max(0.0, part.value - full.value);
  result.converged = result.plateau_delta < options.tol;
  return result;
}

// ============================================================
// Distortion-constant fitting
// ============================================================

QiFitResult fit_qi_constants(const std::vector<std::pair<double, double>>& pairs,
                             const QiFitOptions& options) {
  if (pairs.empty()) throw std::invalid_argument("no distance pairs to fit");
  for (const auto& [ds, dd] : pairs)
    if (!(ds >= 0.0) || !(dd >= 0.0) || !std::isfinite(ds) || !std::isfinite(dd))
      throw std::invalid_argument("distances must be finite and nonnegative");
  if (options.l_steps < 2 || !(options.l_min >= 1.0) || !(options.l_max > options.l_min))
    throw std::invalid_argument("invalid L-grid configuration");
  QiFitResult result;
  double best_score = std::numeric_limits<double>::infinity();
  for (int k = 0; k < options.l_steps; ++k) {
    const double l = options.l_min *
                     std::pow(options.l_max / options.l_min,
                              static_cast<double>(k) / (options.l_steps - 1));
    double c = 0.0;
    for (const auto& [ds, dd] : pairs)
      c = std::max({c, dd - l * ds, ds / l - dd});
    result.frontier.push_back({l, c});
    const double score = l + c / options.knee_scale;
    if (score < best_score) {
      best_score = score;
      result.knee_l = l;
      result.knee_c = c;
    }
  }
  result.l = result.knee_l * options.margin_mult;
  result.c = result.knee_c * options.margin_mult + options.margin_add;
  result.train_violations = count_qi_violations(pairs, result.l, result.c);
  return result;
}

std::size_t count_qi_violations(const std::vector<std::pair<double, double>>& pairs,
                                double l, double c) {
  std::size_t bad = 0;
  for (const auto& [ds, dd] : pairs)
    if (dd > l * ds + c || dd < ds / l - c) ++bad;
  return bad;
}

std::vector<std::pair<double, double>> sample_an_map_pairs(std::uint64_t seed,
                                                           std::size_t count,
                                                           double box) {
  std::mt19937_64 gen(seed);
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(count);
  const auto draw = [&] {
    return H2Point{uniform_in(gen, -box, box), uniform_in(gen, -box, box)};
  };
  for (std::size_t i = 0; i < count; ++i) {
    const H2Point p1 = draw(), p2 = draw(), q1 = draw(), q2 = draw();
    const double ds = std::hypot(dist_h2(p1, q1), dist_h2(p2, q2));
    const double dd = dist_sym(an_map(p1, p2), an_map(q1, q2));
    pairs.emplace_back(ds, dd);
  }
  return pairs;
}

// ============================================================
// Flat-image diagnostics
// ============================================================

VerticalFlatReport vertical_flat_report(double x0, double z0,
                                        const VerticalFlatOptions& options) {
  if (!(options.radius > 0.0) || options.grid < 2 || options.arc_samples < 8)
    throw std::invalid_argument("invalid vertical-flat options");
  VerticalFlatReport report;
  Mat3 unipotent = Mat3::Identity();
  unipotent(0, 1) = x0;
  unipotent(0, 2) = z0;
  for (int i = 0; i < options.grid; ++i)
    for (int j = 0; j < options.grid; ++j) {
      const double t = -options.radius + 2.0 * options.radius * i / (options.grid - 1);
      const double s = -options.radius + 2.0 * options.radius * j / (options.grid - 1);
      const SymPoint image = an_map(H2Point{t, x0}, H2Point{s, z0});
      Mat3 diag = Mat3::Zero();
      diag(0, 0) = std::exp((2.0 / 3.0) * (t + s));
      diag(1, 1) = std::exp((2.0 / 3.0) * (s - 2.0 * t));
      diag(2, 2) = std::exp((2.0 / 3.0) * (t - 2.0 * s));
      const SymPoint reference = make_sym_point(unipotent * diag, false);
      report.max_residual = std::max(report.max_residual, dist_sym(image, reference));
    }
  // Wall crossings of the exponent path along the open positive-quadrant arc.
  int crossings = 0;
  int last_sign[3] = {0, 0, 0};
  for (int k = 0; k < options.arc_samples; ++k) {
    const double theta = (k + 0.5) * (kPi / 2.0) / options.arc_samples;
    const double t = options.radius * std::cos(theta);
    const double s = options.radius * std::sin(theta);
    const double lambda[3] = {(2.0 / 3.0) * (t + s), (2.0 / 3.0) * (s - 2.0 * t),
                              (2.0 / 3.0) * (t - 2.0 * s)};
    const double diffs[3] = {lambda[0] - lambda[1], lambda[0] - lambda[2],
                             lambda[1] - lambda[2]};
    for (int d = 0; d < 3; ++d) {
      const int sign = (diffs[d] > 0.0) - (diffs[d] < 0.0);
      if (sign != 0) {
        if (last_sign[d] != 0 && sign != last_sign[d]) ++crossings;
        last_sign[d] = sign;
      }
    }
  }
  report.wall_crossings = crossings;
  report.single_flat = report.max_residual <= options.flat_tol;
  return report;
}

NonrigidFlatSpec sample_nonrigid_flat(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  NonrigidFlatSpec spec;
  spec.center1 = uniform_in(gen, -1.0, 1.0);
  spec.radius1 = uniform_in(gen, 1.0, 2.0);
  spec.center2 = uniform_in(gen, -1.0, 1.0);
  spec.radius2 = uniform_in(gen, 1.0, 2.0);
  return spec;
}

NonrigidFlatReport nonrigid_flat_report(const NonrigidFlatSpec& spec,
                                        const NonrigidOptions& options) {
  const FlatMap flat = [&spec](double u1, double u2) -> Mat3 {
    return nonrigid_map(semicircle_point(spec.center1, spec.radius1, u1),
                        semicircle_point(spec.center2, spec.radius2, u2))
        .rep;
  };
  return flat_pipeline(flat, options);
}

NonrigidFlatReport anmap_flat_baseline(double x0, double z0,
                                       const NonrigidOptions& options) {
  const FlatMap flat = [x0, z0](double t, double s) -> Mat3 {
    return an_map(H2Point{t, x0}, H2Point{s, z0}).rep;
  };
  return flat_pipeline(flat, options);
}

// ============================================================
// Report fragments
// ============================================================

namespace {

nlohmann::ordered_json complex_json(const Cplx& z) {
  return nlohmann::ordered_json::array({z.real(), z.imag()});
}

nlohmann::ordered_json vector_json(const Vec3c& v) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (int i = 0; i < 3; ++i) out.push_back(complex_json(v(i)));
  return out;
}

}  // namespace

nlohmann::ordered_json vertical_report_json(const VerticalFlatReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = "anmap-flat/1";
  j["max_residual"] = report.max_residual;
  j["wall_crossings"] = report.wall_crossings;
  j["single_flat"] = report.single_flat;
  return j;
}

nlohmann::ordered_json nonrigid_report_json(const NonrigidFlatReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = "nonrigid-flat/1";
  j["raw_flags"] = report.raw_flags;
  nlohmann::ordered_json flags = nlohmann::ordered_json::array();
  for (const auto& f : report.flags) {
    nlohmann::ordered_json fj;
    fj["line"] = vector_json(f.line);
    fj["plane_normal"] = vector_json(f.plane_normal);
    fj["top_gap"] = f.top_gap;
    fj["mid_gap"] = f.mid_gap;
    flags.push_back(std::move(fj));
  }
  j["flags"] = std::move(flags);
  j["common_frame"] = report.common_frame;
  j["frame_margin"] = report.frame_margin;
  j["radii"] = report.radii;
  j["flat_distance"] = report.flat_distance;
  j["growth_slope"] = report.growth_slope;
  return j;
}

nlohmann::ordered_json fit_result_json(const QiFitResult& result) {
  nlohmann::ordered_json j;
  j["schema"] = "qi-fit/1";
  j["l"] = result.l;
  j["c"] = result.c;
  j["knee_l"] = result.knee_l;
  j["knee_c"] = result.knee_c;
  j["train_violations"] = result.train_violations;
  nlohmann::ordered_json frontier = nlohmann::ordered_json::array();
  for (const auto& pt : result.frontier)
    frontier.push_back(nlohmann::ordered_json::array({pt.l, pt.c}));
  j["frontier"] = std::move(frontier);
  return j;
}

}  // namespace qie
