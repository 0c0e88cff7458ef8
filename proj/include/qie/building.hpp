#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qie/padic.hpp"

namespace qie {

/// Homothety class of a full-rank Z_p-lattice in Q_p^n (n = 2 or 3), stored
/// as its canonical basis: upper-triangular column form with diagonal p^a_i,
/// the entry in row i of a later column reduced mod p^a_i, scaled so the
/// minimal valuation over all entries is zero (the unique primitive scale).
struct LatticeClass {
  long prime = 2;
  int n = 3;
  std::vector<long> diag;               // a_i >= 0
  std::vector<std::vector<Int>> upper;  // entry(i, j) for i < j, in [0, p^a_i)
  int prec = kPadicDefaultPrecision;    // certified digits of the form
};

using PadicMatrix = std::vector<std::vector<PadicScalar>>;

LatticeClass base_lattice(long p, int n, int prec = kPadicDefaultPrecision);
/// Canonical class of the column span of an n x k matrix over Q_p (k >= n,
/// full rank at the working precision). Idempotent on canonical bases and
/// invariant under right multiplication by invertible integral matrices.
LatticeClass lattice_normal_form(const PadicMatrix& columns_matrix);
/// Canonical basis back as a scalar matrix.
PadicMatrix lattice_matrix(const LatticeClass& L);
std::string lattice_key(const LatticeClass& L);
bool lattice_eq(const LatticeClass& a, const LatticeClass& b);
nlohmann::ordered_json lattice_json(const LatticeClass& L);
LatticeClass lattice_from_json(const nlohmann::json& j);

/// Vector of elementary-divisor exponents of the transition between two
/// classes, sorted descending; defined up to a common shift and normalized
/// to sum-zero mean only inside the CAT(0) distance.
struct RelPosition {
  std::vector<long> exp;
};

RelPosition relative_position(const LatticeClass& a, const LatticeClass& b);
/// Euclidean length of the relative position after removing the mean
/// (fixes the homothety shift).
double cat0_distance(const LatticeClass& a, const LatticeClass& b);
/// Closed-form 1-skeleton distance: spread (max - min) of the relative
/// position exponents. Cross-checked against the BFS oracle.
long comb_distance_formula(const LatticeClass& a, const LatticeClass& b);
/// All classes adjacent to L in the building 1-skeleton (sublattices of
/// index p and p^(n-1) between pL and L).
std::vector<LatticeClass> lattice_neighbors(const LatticeClass& L);
/// Bidirectional breadth-first distance over lattice_neighbors; throws when
/// the distance would exceed cap.
long comb_distance_bfs(const LatticeClass& a, const LatticeClass& b, long cap);

// ---------------------------------------------------------------------------
// Rank-2 layer: the (p+1)-regular tree with a marked end xi.
// ---------------------------------------------------------------------------

struct TreeVertex {
  LatticeClass lattice;  // n = 2
};

/// Horospherical chart relative to the marked end: the vertex is the ball
/// of radius p^-level around the translation; the translation is meaningful
/// mod p^level. The level decreases toward the marked end.
struct TreeChart {
  long level = 0;
  PadicScalar x;
};

TreeVertex tree_vertex(long p, long level, const PadicScalar& x,
                       int prec = kPadicDefaultPrecision);
TreeVertex tree_base_vertex(long p, int prec = kPadicDefaultPrecision);
TreeChart tree_chart(const TreeVertex& v);
std::vector<TreeVertex> tree_neighbors(const TreeVertex& v);
/// Graph distance from the chart data (meet-level formula).
long tree_distance(const TreeVertex& a, const TreeVertex& b);
/// Chart level; decreases monotonically along geodesics toward the marked
/// end, so "bounded away from the end" means level bounded below.
long tree_level(const TreeVertex& v);

/// Self-embedding of the 3-regular tree (p = 2) induced by a prefix recoding
/// of the boundary: integers gain a leading 0 digit, 2^-k units gain the
/// prefix 1^k 0, and vertices on the ray to the marked end map to the
/// all-ones prefix balls. The image never enters negative levels, so the
/// marked end is not in the boundary of the image.
TreeVertex qi_self_embedding_tree(const TreeVertex& v);

/// Discrete counterpart of the continuous upper-triangular map: the class of
///   N(x, z) * diag(1, p^-t, p^-s)
/// for charts (t, x), (s, z). The unipotent weights match the chart ball
/// scales exactly, so horocyclic moves are carried isometrically.
LatticeClass an_map_p(const TreeVertex& u, const TreeVertex& w);

/// Exhaustive two-sided linear-bound check for the tree self-embedding over
/// all vertex pairs in the ball of the given radius around the base vertex:
///   dist(img) <= l * dist(src) + c   and   dist(src)/l - c <= dist(img).
struct TreeEmbeddingCheck {
  long radius = 0;
  long vertices = 0;
  long long pairs = 0;
  long long upper_violations = 0;
  long long lower_violations = 0;
  long min_image_level = 0;   // stays >= 0: the marked end is avoided
  double max_upper_excess = 0.0;  // max of dist(img) - (l*dist(src) + c)
  double max_lower_excess = 0.0;  // max of dist(src)/l - c - dist(img)
};
TreeEmbeddingCheck certify_tree_embedding(long radius, double l, double c);

// ---------------------------------------------------------------------------
// Flats, sector flags, and the nonrigidity pipeline.
// ---------------------------------------------------------------------------

/// Boundary point of the tree given as num / p^den_exp (never the marked end).
struct TreeEnd {
  Int num = 0;
  long den_exp = 0;
};

/// Bi-infinite geodesic determined by two distinct ends.
struct TreeGeodesic {
  TreeEnd a;  // direction of negative parameters
  TreeEnd b;  // direction of positive parameters
};

/// Vertex at (signed) arclength u along the geodesic, measured from the meet.
TreeVertex tree_geodesic_vertex(long p, const TreeGeodesic& g, long u, int prec);

/// Seeded pair of geodesics with small end data (controlled valuations keep
/// the limit flags cleanly separated at the working precision).
std::pair<TreeGeodesic, TreeGeodesic> sample_tree_flat(std::uint64_t seed);

struct BuildingFlag {
  std::array<PadicScalar, 3> line;          // primitive direction vector
  std::array<PadicScalar, 3> plane_normal;  // primitive covector
  std::array<long, 3> ray_exponents;        // deep relative position (desc)
  PadicMatrix frame;                        // extracted principal directions
  long depth = 0;                           // certified digits of the flag
};

/// 1-skeleton distance from a class to the apartment of all diagonal classes
/// in the given frame (basis columns), via the closed-form valuation profile.
long apartment_distance(const LatticeClass& x, const PadicMatrix& frame);
/// Same restricted to the sector frame * diag(p^a) with the exponents ordered
/// a[desc_order[0]] >= a[desc_order[1]] >= a[desc_order[2]].
long sector_distance(const LatticeClass& x, const PadicMatrix& frame,
                     const std::array<int, 3>& desc_order);

struct BuildingNonrigidOptions {
  long flag_horizon = 16;       // deep representatives at 2x/1x this arclength
  long match_val = 8;           // digits of agreement that count as "equal"
  std::vector<long> radii = {16, 32, 64, 128};
  int random_apartments = 64;
  std::uint64_t candidate_seed = 2026;
  int boundary_samples = 16;    // image points probed against apartments
  int grid_stride = 1;          // subsample stride for the union supremum
  int prec = 0;                 // 0: derive from the largest radius
};

struct BuildingNonrigidReport {
  std::size_t raw_flags = 0;
  std::vector<BuildingFlag> flags;  // deduplicated
  bool common_frame = false;
  long frame_margin = 0;            // agreement depth of the best frame
  std::vector<long> radii;
  std::vector<long> union_sup;          // sup over image of distance to the
                                        // union of the computed sectors
  std::vector<long> apartment_floor;    // min over candidate apartments of the
                                        // largest sampled image distance
  std::size_t candidate_count = 0;
};

/// Image analysis of the flat spanned by two geodesics under the composition
/// of the self-embedding on both factors with the discrete AN-map.
BuildingNonrigidReport building_nonrigid_report(const TreeGeodesic& g1,
                                                const TreeGeodesic& g2,
                                                const BuildingNonrigidOptions& options = {});

/// Control run: the same analysis for the pure AN-map image of a vertical
/// flat (both geodesics through the marked end). Expected to sit inside a
/// single apartment with a common frame for all limit flags.
BuildingNonrigidReport building_anmap_baseline(const PadicScalar& x0, const PadicScalar& z0,
                                               const BuildingNonrigidOptions& options = {});

nlohmann::ordered_json building_report_json(const BuildingNonrigidReport& report);

}  // namespace qie
