#pragma once

#include "qie/ratlin.hpp"

#include <json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace qie {

// Hyperplane through the origin, stored as the canonical coordinate normal:
// primitive integer covector with positive leading nonzero entry.
struct Hyperplane {
  std::vector<Int> normal;

  bool operator==(const Hyperplane& o) const { return normal == o.normal; }
};

struct FactorInfo {
  std::string type;   // "A","BC","D","G2","F4","E6","E7","E8","restricted"
  std::size_t rank;   // equals the coordinate block size
  std::size_t offset; // first coordinate of the block
};

// Reflection-hyperplane arrangement in coordinates of dimension dim (= total
// rank). `realization` rows are a rational basis of the defining subspace
// V inside the standard inner-product space R^N, so the Gram matrix of the
// coordinates is realization * realization^T. `roots` (when present) are the
// defining covectors in R^N, aligned with `hyperplanes`.
struct Arrangement {
  std::size_t dim = 0;
  std::size_t real_dim = 0;               // N
  RatMat realization;                     // dim x N
  std::vector<Hyperplane> hyperplanes;    // sorted lexicographically, distinct
  std::vector<std::vector<Int>> roots;    // may be empty (restricted patterns)
  std::vector<FactorInfo> factors;

  [[nodiscard]] RatMat gram() const;
  [[nodiscard]] std::size_t count() const { return hyperplanes.size(); }
  /// Index of the hyperplane with this (not necessarily canonical) normal.
  [[nodiscard]] std::size_t index_of(const RatVec& normal) const;
  [[nodiscard]] bool has_normal(const RatVec& normal) const;
};

struct SingularSubspace {
  RatMat basis;                        // RREF rows, canonical
  std::size_t dim = 0;
  std::vector<std::size_t> containing; // indices of all hyperplanes containing it
};

/// Canonical irreducible pattern. Valid pairs: A n>=1, BC n>=2, D n>=4,
/// G2/F4/E6/E7/E8 with their fixed ranks. D2/D3 are rejected: those hyperplane
/// families coincide with type-A patterns and are not accepted as D inputs.
Arrangement build_irreducible(const std::string& type, std::size_t rank);

/// Product pattern: block-diagonal union of the factors' hyperplanes.
Arrangement build_product(const std::vector<Arrangement>& factors);

/// Hyperplane family {x_i = ±x_j} in R^n, n >= 2. Coincides with the D-type
/// pattern for n >= 4; used as the embedded pattern in restriction chains.
Arrangement build_sign_pair_pattern(std::size_t n);

/// Parses "A2", "BC3", "D4", "G2", ... and products like "A1xA1xA2".
Arrangement parse_pattern_spec(const std::string& spec);

std::size_t hyperplane_count(const Arrangement& arr);

/// All intersections of hyperplane subsets with dim >= min_dim, including the
/// ambient space. Deduplicated by canonical basis; sorted by (dim desc, basis).
std::vector<SingularSubspace> singular_subspaces(const Arrangement& arr,
                                                 std::size_t min_dim,
                                                 std::size_t max_results = 200000);

/// The singular subspace cut out by one hyperplane.
SingularSubspace hyperplane_subspace(const Arrangement& arr, std::size_t index);

/// True when sub equals the intersection of the hyperplanes containing it
/// (or the full ambient space).
bool is_singular_subspace(const Arrangement& arr, const SingularSubspace& sub);

/// Pattern induced on a singular subspace: distinct codimension-1 traces
/// sub ∩ H over hyperplanes H not containing sub, in the canonical basis
/// coordinates of sub. Restricting to the full ambient returns arr unchanged.
Arrangement restrict(const Arrangement& arr, const SingularSubspace& sub);

/// Max over excluded hyperplanes H of dim(intersection of all others).
/// Requires at least 2 hyperplanes.
std::size_t codim1_residual_dim(const Arrangement& arr);

/// Positive-root counts by reflection closure of the simple roots; independent
/// of the explicit normal tables used by build_irreducible.
std::size_t positive_root_count_oracle(const std::string& type, std::size_t rank);

/// Checks that reflecting the root line set across each root permutes it.
bool reflection_closure_holds(const Arrangement& arr);

// One certified level of a restriction chain: the subspace, its induced
// pattern, and the embedded sign-pair pattern witnessing the strict count gap.
struct ChainLevel {
  SingularSubspace subspace;     // in the coordinates of the original pattern
  std::size_t restricted_count = 0;
  std::size_t embedded_count = 0;
  bool embedding_ok = false;     // every embedded hyperplane lands on a restricted one
};

struct ChainCertificate {
  std::vector<ChainLevel> levels; // dims n-1 down to 2
  bool ok = false;
};

/// Witness chain of nested singular subspaces of dims n-1,...,2 whose induced
/// patterns each contain a sign-pair pattern of matching dimension with
/// strictly more hyperplanes. Supported: BC_n (n>=3), D_n (n>=4), F4.
ChainCertificate successive_chain(const Arrangement& arr);

/// Parses a hyperplane selector in realization coordinates: "xI=xJ",
/// "xI=-xJ", "xI=0", or an explicit covector "c1,...,cN". Returns the index
/// of the matching hyperplane.
std::size_t select_hyperplane(const Arrangement& arr, const std::string& selector);

nlohmann::ordered_json arrangement_to_json(const Arrangement& arr);
Arrangement arrangement_from_json(const nlohmann::json& j);

}  // namespace qie
