#pragma once

#include "qie/arrangement.hpp"

#include <optional>

namespace qie {

// Maps are d_target x d_source rational matrices acting on arrangement
// coordinates. "Pattern-preserving" means: for equal dimensions, every source
// hyperplane maps onto a target hyperplane; for strictly smaller source
// dimension, every source hyperplane maps into a target singular subspace of
// the same dimension as its image (dimension-preserving reading).

struct PreserveDecision {
  bool preserving = false;
  // Per source hyperplane: target hyperplane index (equal dimensions) or an
  // index into the dimension-filtered singular subspace list (injective mode).
  std::vector<std::size_t> assignment;
  std::string reason;  // set when not preserving
};

PreserveDecision is_pattern_preserving(const RatMat& map, const Arrangement& src,
                                       const Arrangement& dst);

struct FactorImageReport {
  bool total = false;
  std::vector<std::size_t> image;  // source factor index -> target factor index
  std::string violation;           // set when some factor meets two target blocks
};

/// Requires map to be pattern-preserving.
FactorImageReport factor_image(const RatMat& map, const Arrangement& src, const Arrangement& dst);

struct SearchConfig {
  std::size_t rank_cap = 4;
  bool allow_injective = false;  // gate for d_source < d_target searches
};

struct PreserverCertificate {
  RatMat map;  // canonical: first nonzero entry of each source-factor column block is 1
  std::vector<std::size_t> assignment;
  std::vector<std::size_t> factor_map;
  bool factor_total = false;
};

/// Exhaustive backtracking search over hyperplane assignments; an empty result
/// is a nonexistence proof within the rank cap. Certificates are deduplicated
/// up to per-source-factor rescaling and ordered lexicographically by
/// assignment.
std::vector<PreserverCertificate> search_preservers(const Arrangement& src,
                                                    const Arrangement& dst,
                                                    const SearchConfig& config = {});

/// Per source factor: whether the factor block of the map scales the pattern
/// inner product (block' * G_target * block == c * G_source, c > 0). Requires
/// a pattern-preserving map with total factor image.
std::vector<bool> is_conformal_per_factor(const RatMat& map, const Arrangement& src,
                                          const Arrangement& dst);

/// Known-symmetry oracle: per-factor reflection group elements (full closure
/// for factor rank <= 4, sampled words above), composed with permutations of
/// isomorphic factors; for D4 factors the order-3 outer symmetry is included.
/// Every returned map is asserted pattern-preserving.
std::vector<RatMat> enumerate_symmetry_preservers(const Arrangement& arr);

// Explicit equivalence of the rank-(n-1) type-A pattern with the restriction
// of the rank-n one to any of its hyperplanes: duplicate the merged coordinate
// and recenter to the sum-zero realization.
struct ARestrictionWitness {
  std::size_t hyperplane = 0;
  SingularSubspace subspace;
  Arrangement restricted;
  RatMat map;  // from rank-(n-1) type-A coordinates to the restricted coordinates
};

ARestrictionWitness a_type_restriction_witness(std::size_t n, std::size_t hyperplane_index);

nlohmann::ordered_json certificate_to_json(const PreserverCertificate& cert);
nlohmann::ordered_json matrix_to_json(const RatMat& m);
RatMat matrix_from_json(const nlohmann::json& j);

}  // namespace qie
