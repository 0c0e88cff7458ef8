#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace qie {

// ============================================================
// Points of the nonpositively curved model spaces
// ============================================================

/// A point of SL(n,R)/SO(n) or SL(n,C)/SU(n), n in {2,3}, stored as the unique
/// upper-triangular coset representative with positive diagonal and det 1.
struct SymPoint {
  int n = 0;
  bool complex_field = false;  // false: all entries have zero imaginary part
  Eigen::MatrixXcd rep;
};

/// Validates (finiteness, shape, triangularity, positive diagonal), clears
/// rounding drift in the lower triangle / imaginary parts, and renormalizes
/// the determinant to 1. Throws std::invalid_argument on violations.
SymPoint make_sym_point(Eigen::MatrixXcd upper, bool complex_field);

/// Upper-triangular coset representative of a general invertible matrix
/// (Iwasawa decomposition g = h * k with k unitary).
SymPoint iwasawa_point(const Eigen::MatrixXcd& g, bool complex_field);

SymPoint sym_identity(int n, bool complex_field);

/// Left translation g.p (both upper triangular, so the product is too).
SymPoint sym_translate(const SymPoint& g, const SymPoint& p);

/// Distance: Euclidean norm of the log singular values of rep(p)^{-1} rep(q).
/// d(I, diag(e,1,1/e)) = sqrt(2) under this normalization.
double dist_sym(const SymPoint& p, const SymPoint& q);

// ============================================================
// Hyperbolic plane / 3-space charts
// ============================================================

/// (t, x) <-> upper-triangular [[e^t, x e^{-t}], [0, e^{-t}]]; the half-plane
/// point is x + i e^{2t}. Distances use the dist_sym normalization, i.e.
/// 1/sqrt(2) times the curvature -1 distance.
struct H2Point {
  double t = 0.0;
  double x = 0.0;
};

struct H3Point {
  double t = 0.0;
  std::complex<double> z{0.0, 0.0};
};

SymPoint h2_rep(const H2Point& p);
SymPoint h3_rep(const H3Point& p);
/// Inverse chart of h3_rep (requires n = 2).
H3Point h3_coords(const SymPoint& p);

double dist_h2(const H2Point& a, const H2Point& b);
double dist_h3(const H3Point& a, const H3Point& b);

// ============================================================
// The explicit embedding of a rank-2 product into the rank-2 space
// ============================================================

/// ((t,x),(s,z)) |-> [[e^{(2/3)(t+s)}, x e^{(2/3)(s-2t)}, z e^{(2/3)(t-2s)}],
///                    [0, e^{(2/3)(s-2t)}, 0], [0, 0, e^{(2/3)(t-2s)}]].
SymPoint an_map(const H2Point& first, const H2Point& second);
/// Same formula with complex horospherical coordinates.
SymPoint an_map(const H3Point& first, const H3Point& second);

/// Totally geodesic H2 -> H3 postcomposed with a fixed Moebius rotation that
/// carries the image boundary circle away from the end at infinity.
/// Isometric; the Busemann height toward infinity stays bounded above.
SymPoint embed_h2_in_h3(const H2Point& p);

/// The composed embedding H2 x H2 -> H3 x H3 -> SL(3,C)/SU(3).
SymPoint nonrigid_map(const H2Point& first, const H2Point& second);

// ============================================================
// Boundary rays and asymptote distances
// ============================================================

/// One of the two distinguished singular boundary points, given by the
/// diagonal generator of its ray from the identity.
struct BoundaryPointSpec {
  std::string label;           // "xi1" or "xi2"
  Eigen::Vector3d generator;   // diagonal of H; ray(t) = exp(t H)
  static BoundaryPointSpec xi1();  // diag(2/3, -4/3, 2/3)
  static BoundaryPointSpec xi2();  // diag(2/3, 2/3, -4/3)
  double speed() const;            // |generator| in the dist_sym metric
};

struct AsymptoteOptions {
  double horizon = 40.0;  // rays are explored on [0, horizon]^2
  double tol = 1e-3;      // plateau test threshold
  int coarse_steps = 32;  // coarse grid resolution per axis
  int refine_levels = 40; // nested window halvings around the argmin
};

struct AsymptoteResult {
  double value = 0.0;
  bool converged = false;
  double plateau_delta = 0.0;  // min over [0, 3T/4]^2 minus min over [0, T]^2
};

/// inf over (t1,t2) of d(ray_p(t1), ray_q(t2)) where ray_x is the geodesic ray
/// from x asymptotic to xi (computed via the xi-adapted representative).
/// Converged when enlarging the horizon from 3T/4 to T changed the minimum by
/// less than tol.
AsymptoteResult asymptote_distance(const SymPoint& p, const SymPoint& q,
                                   const BoundaryPointSpec& xi,
                                   const AsymptoteOptions& options = {});

// ============================================================
// Two-sided distortion-constant fitting
// ============================================================

struct QiFitOptions {
  double l_min = 1.0;
  double l_max = 8.0;
  int l_steps = 97;          // geometric grid; defaults hit 2 and 4 exactly
  double knee_scale = 10.0;  // knee minimizes L + C/knee_scale
  double margin_mult = 1.05; // safety margins applied to the knee for the
  double margin_add = 0.1;   // returned constants (held-out robustness)
};

struct QiFrontierPoint {
  double l = 0.0;
  double c = 0.0;
};

struct QiFitResult {
  double l = 0.0;       // knee constants with safety margins applied
  double c = 0.0;
  double knee_l = 0.0;  // raw Pareto-knee constants
  double knee_c = 0.0;
  std::vector<QiFrontierPoint> frontier;
  std::size_t train_violations = 0;  // violations of (l, c) on the input pairs
};

/// For each L on the grid, C(L) is the smallest additive constant making both
/// inequalities (1/L) d_src - C <= d_dst <= L d_src + C hold for every pair.
QiFitResult fit_qi_constants(const std::vector<std::pair<double, double>>& pairs,
                             const QiFitOptions& options = {});

std::size_t count_qi_violations(const std::vector<std::pair<double, double>>& pairs,
                                double l, double c);

/// Seeded (d_source, d_target) samples of an_map on the coordinate box
/// |t|,|x|,|s|,|z| <= box, with the l2 product metric on the source.
std::vector<std::pair<double, double>> sample_an_map_pairs(std::uint64_t seed,
                                                           std::size_t count,
                                                           double box);

// ============================================================
// Flat-image diagnostics
// ============================================================

struct VerticalFlatOptions {
  double radius = 5.0;
  int grid = 32;          // grid x grid sample of the flat
  int arc_samples = 1001; // samples of the quadrant arc for wall crossings
  double flat_tol = 1e-9;
};

struct VerticalFlatReport {
  double max_residual = 0.0;  // max d(image point, unipotent * diagonal flat)
  int wall_crossings = 0;     // sign changes of exponent differences on the
                              // open positive-quadrant arc
  bool single_flat = false;   // max_residual <= flat_tol
};

/// Image of the vertical flat {(t,x0),(s,z0)} under an_map.
VerticalFlatReport vertical_flat_report(double x0, double z0,
                                        const VerticalFlatOptions& options = {});

/// Limit flag (line in plane) of one sector direction, estimated from the
/// singular-vector frame of a far image point.
struct FlagEstimate {
  Eigen::Vector3cd line;
  Eigen::Vector3cd plane_normal;
  Eigen::Matrix3cd frame;  // full left singular-vector frame
  double top_gap = 0.0;    // sigma1/sigma2
  double mid_gap = 0.0;    // sigma2/sigma3
  bool rank_ok = false;
};

/// A product flat: two half-plane geodesics given as semicircles
/// (center +- radius are the boundary endpoints).
struct NonrigidFlatSpec {
  double center1 = 0.0, radius1 = 1.0;
  double center2 = 0.0, radius2 = 1.0;
};

NonrigidFlatSpec sample_nonrigid_flat(std::uint64_t seed);

struct NonrigidOptions {
  double flag_horizon = 18.0;  // ray parameter for flag estimation
  double dedup_angle = 1e-3;   // radians; flags closer than this merge
  double frame_tol = 0.05;     // radians; coverage tolerance for the verdict
  double rank_gap_min = 10.0;  // minimal singular-value ratios for rank_ok
  std::vector<double> radii = {5.0, 10.0, 20.0, 40.0};
  int cloud_ring = 40;    // boundary samples of the flat disk
  int cloud_inner = 20;   // interior samples
  int candidate_random = 12;
  std::uint64_t candidate_seed = 7;
  int descent_sweeps = 6;  // coordinate-descent sweeps per flat distance
  int golden_steps = 24;   // golden-section steps per sweep direction
  int refine_sweeps = 2;   // frame-refinement sweeps on the best candidate
  int refine_steps = 6;
  int refine_cloud = 16;
};

struct NonrigidFlatReport {
  std::size_t raw_flags = 0;
  std::vector<FlagEstimate> flags;  // deduplicated, rank-certified
  bool common_frame = false;        // do all flags fit one frame of 3 lines?
  double frame_margin = 0.0;        // radians; best-frame worst coverage
  std::vector<double> radii;
  std::vector<double> flat_distance;  // min over candidate flats of max over
                                      // the sampled image cloud
  double growth_slope = 0.0;          // least-squares slope vs radius
};

/// Full diagnostics for a product flat under the composed embedding.
NonrigidFlatReport nonrigid_flat_report(const NonrigidFlatSpec& spec,
                                        const NonrigidOptions& options = {});

/// Control case: the same diagnostics for a vertical flat under the plain
/// an_map (expected: common frame found, no distance growth).
NonrigidFlatReport anmap_flat_baseline(double x0, double z0,
                                       const NonrigidOptions& options = {});

// ============================================================
// Report fragments
// ============================================================

nlohmann::ordered_json vertical_report_json(const VerticalFlatReport& report);
nlohmann::ordered_json nonrigid_report_json(const NonrigidFlatReport& report);
nlohmann::ordered_json fit_result_json(const QiFitResult& result);

}  // namespace qie
