#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qie/arrangement.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

using namespace qie;

namespace {

/// Brute-force singular subspaces: intersect every subset of hyperplanes.
std::set<std::string> subset_intersection_oracle(const Arrangement& arr, std::size_t min_dim) {
  std::set<std::string> keys;
  auto key_of = [](const RatMat& basis) {
    std::string k;
    for (const auto& row : basis) {
      for (const auto& x : row) k += format_rational(x) + ",";
      k += ";";
    }
    return k;
  };
  const std::size_t m = arr.hyperplanes.size();
  REQUIRE(m <= 16);
  for (std::size_t mask = 0; mask < (std::size_t(1) << m); ++mask) {
    RatMat normals;
    for (std::size_t h = 0; h < m; ++h)
      if (mask & (std::size_t(1) << h)) normals.push_back(to_rational(arr.hyperplanes[h].normal));
    const RatMat basis = rat_rref(RatMat(rat_nullspace(normals, arr.dim))).mat;
    if (basis.size() >= min_dim) keys.insert(key_of(basis));
  }
  return keys;
}

std::string subspace_key(const SingularSubspace& sub) {
  std::string k;
  for (const auto& row : sub.basis) {
    for (const auto& x : row) k += format_rational(x) + ",";
    k += ";";
  }
  return k;
}

std::set<std::vector<Int>> normal_set(const Arrangement& arr) {
  std::set<std::vector<Int>> out;
  for (const auto& h : arr.hyperplanes) out.insert(h.normal);
  return out;
}

}  // namespace

// ============================================================
// construction and counting against the reflection-orbit oracle
// ============================================================

TEST_CASE("hyperplane counts match the independent reflection-orbit oracle") {
  std::vector<std::pair<std::string, std::size_t>> table;
  for (std::size_t n = 1; n <= 8; ++n) table.emplace_back("A", n);
  for (std::size_t n = 2; n <= 8; ++n) table.emplace_back("BC", n);
  for (std::size_t n = 4; n <= 8; ++n) table.emplace_back("D", n);
  table.emplace_back("G2", 2);
  table.emplace_back("F4", 4);
  table.emplace_back("E6", 6);
  table.emplace_back("E7", 7);
  table.emplace_back("E8", 8);
  for (const auto& [type, rank] : table) {
    CAPTURE(type);
    CAPTURE(rank);
    const Arrangement arr = build_irreducible(type, rank);
    CHECK(hyperplane_count(arr) == positive_root_count_oracle(type, rank));
    // Closed forms, frozen separately from both computations.
    std::size_t expected = 0;
    if (type == "A") expected = rank * (rank + 1) / 2;
    if (type == "BC") expected = rank * rank;
    if (type == "D") expected = rank * (rank - 1);
    if (type == "G2") expected = 6;
    if (type == "F4") expected = 24;
    if (type == "E6") expected = 36;
    if (type == "E7") expected = 63;
    if (type == "E8") expected = 120;
    CHECK(hyperplane_count(arr) == expected);
    CHECK(arr.dim == rank);
    CHECK(arr.realization.size() == rank);
  }
}

TEST_CASE("invalid type/rank requests are rejected with diagnostics") {
  CHECK_THROWS_AS(build_irreducible("A", 0), std::invalid_argument);
  CHECK_THROWS_AS(build_irreducible("BC", 1), std::invalid_argument);
  CHECK_THROWS_AS(build_irreducible("D", 3), std::invalid_argument);
  CHECK_THROWS_AS(build_irreducible("D", 2), std::invalid_argument);
  CHECK_THROWS_AS(build_irreducible("G2", 3), std::invalid_argument);
  CHECK_THROWS_AS(build_irreducible("E6", 7), std::invalid_argument);
  CHECK_THROWS_AS(build_irreducible("H3", 3), std::invalid_argument);
  try {
    build_irreducible("D", 3);
    FAIL("expected a throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("type-A") != std::string::npos);
  }
}

TEST_CASE("reflections in the defining covectors permute the hyperplane set") {
  for (const std::string& spec : {"A3", "BC3", "D4", "G2", "F4", "E6"}) {
    CAPTURE(spec);
    CHECK(reflection_closure_holds(parse_pattern_spec(spec)));
  }
  CHECK(reflection_closure_holds(parse_pattern_spec("A1xBC2")));
}

TEST_CASE("gram matrices of the non-orthonormal realizations") {
  CHECK(build_irreducible("A", 2).gram() == RatMat{{2, -1}, {-1, 2}});
  CHECK(build_irreducible("G2", 2).gram() == RatMat{{2, -1}, {-1, 2}});
  RatMat e7 = rat_identity(7);
  e7[6][6] = 2;
  CHECK(build_irreducible("E7", 7).gram() == e7);
  RatMat e6 = rat_identity(6);
  e6[5][5] = 3;
  CHECK(build_irreducible("E6", 6).gram() == e6);
  CHECK(build_irreducible("BC", 3).gram() == rat_identity(3));
}

TEST_CASE("products concatenate factor blocks") {
  const Arrangement arr = parse_pattern_spec("A1xA1");
  CHECK(arr.dim == 2);
  CHECK(hyperplane_count(arr) == 2);
  CHECK(arr.factors.size() == 2);
  CHECK(arr.factors[1].offset == 1);

  const Arrangement mixed = parse_pattern_spec("A2xBC2");
  CHECK(mixed.dim == 4);
  CHECK(hyperplane_count(mixed) == 3 + 4);
  // Every normal is supported on a single factor block.
  for (const auto& h : mixed.hyperplanes) {
    const bool first = h.normal[0] != 0 || h.normal[1] != 0;
    const bool second = h.normal[2] != 0 || h.normal[3] != 0;
    CHECK(first != second);
  }
  CHECK_THROWS_AS(build_product({}), std::invalid_argument);
}

TEST_CASE("pattern spec parsing") {
  CHECK(parse_pattern_spec("E8").count() == 120);
  CHECK(parse_pattern_spec("A1xA1xA1").dim == 3);
  CHECK_THROWS_AS(parse_pattern_spec("Q5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_pattern_spec(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_pattern_spec("A2x"), std::invalid_argument);
}

// ============================================================
// singular subspaces
// ============================================================

TEST_CASE("singular subspaces match the subset-intersection oracle") {
  for (const std::string& spec : {"A2", "BC2", "A1xA1", "G2", "A1xA2"}) {
    CAPTURE(spec);
    const Arrangement arr = parse_pattern_spec(spec);
    for (std::size_t min_dim : {std::size_t(0), std::size_t(1)}) {
      const auto subs = singular_subspaces(arr, min_dim);
      std::set<std::string> keys;
      for (const auto& s : subs) {
        CHECK(is_singular_subspace(arr, s));
        keys.insert(subspace_key(s));
      }
      CHECK(keys.size() == subs.size());
      CHECK(keys == subset_intersection_oracle(arr, min_dim));
    }
  }
}

TEST_CASE("singular subspace counts for small patterns") {
  // A2: ambient, 3 lines, origin.
  CHECK(singular_subspaces(parse_pattern_spec("A2"), 0).size() == 5);
  // G2: ambient, 6 lines, origin.
  CHECK(singular_subspaces(parse_pattern_spec("G2"), 0).size() == 8);
  // min_dim prunes.
  CHECK(singular_subspaces(parse_pattern_spec("G2"), 1).size() == 7);
  CHECK(singular_subspaces(parse_pattern_spec("G2"), 3).empty());
  // Ambient comes first and has no containing hyperplanes.
  const auto subs = singular_subspaces(parse_pattern_spec("A2"), 0);
  CHECK(subs[0].dim == 2);
  CHECK(subs[0].containing.empty());
}

TEST_CASE("subspace enumeration result cap") {
  CHECK_THROWS_AS(singular_subspaces(parse_pattern_spec("D4"), 0, 3), std::length_error);
}

TEST_CASE("hyperplane subspace and membership validation") {
  const Arrangement arr = build_irreducible("D", 4);
  const SingularSubspace sub = hyperplane_subspace(arr, 0);
  CHECK(sub.dim == 3);
  CHECK(is_singular_subspace(arr, sub));
  CHECK(sub.containing == std::vector<std::size_t>{0});

  // A line inside {x3=x4=0} that is not itself an intersection of hyperplanes.
  SingularSubspace bogus;
  bogus.basis = {{1, 2, 0, 0}};
  bogus.dim = 1;
  CHECK_FALSE(is_singular_subspace(arr, bogus));
  CHECK_THROWS_AS(restrict(arr, bogus), std::invalid_argument);
}

// ============================================================
// restriction
// ============================================================

TEST_CASE("restricting the sign-pair pattern in R^4 to x1=x2 gives 7 hyperplanes") {
  const Arrangement d4 = build_irreducible("D", 4);
  const std::size_t idx = select_hyperplane(d4, "x1=x2");
  const Arrangement res = restrict(d4, hyperplane_subspace(d4, idx));
  CHECK(res.dim == 3);
  CHECK(hyperplane_count(res) == 7);
  // In the canonical basis (1,1,0,0),(0,0,1,0),(0,0,0,1) of {x1=x2}, the
  // induced hyperplanes are x1=x2=0, x1=x2=+-x3, x1=x2=+-x4, x3=+-x4.
  const std::set<std::vector<Int>> expected = {
      {1, 0, 0},  {1, -1, 0}, {1, 1, 0}, {1, 0, -1},
      {1, 0, 1},  {0, 1, -1}, {0, 1, 1}};
  CHECK(normal_set(res) == expected);
  CHECK(res.factors.size() == 1);
  CHECK(res.factors[0].type == "restricted");
}

TEST_CASE("restriction to the ambient space is the identity") {
  const Arrangement arr = build_irreducible("BC", 2);
  SingularSubspace ambient;
  ambient.basis = rat_identity(2);
  ambient.dim = 2;
  const Arrangement same = restrict(arr, ambient);
  CHECK(normal_set(same) == normal_set(arr));
  CHECK(same.factors[0].type == "BC");
}

TEST_CASE("restricted gram matrix composes through the realization") {
  const Arrangement a3 = build_irreducible("A", 3);
  const SingularSubspace sub = hyperplane_subspace(a3, 0);
  const Arrangement res = restrict(a3, sub);
  CHECK(res.gram() == rat_mul(rat_mul(sub.basis, a3.gram()), rat_transpose(sub.basis)));
  // A3 restricted to a hyperplane has the rank-2 type-A count.
  CHECK(hyperplane_count(res) == 3);
}

TEST_CASE("codim-1 residual dimension") {
  CHECK(codim1_residual_dim(parse_pattern_spec("A2")) == 0);
  CHECK(codim1_residual_dim(parse_pattern_spec("A1xA1")) == 1);
  CHECK(codim1_residual_dim(parse_pattern_spec("D4")) == 0);
  CHECK(codim1_residual_dim(parse_pattern_spec("BC2")) == 0);
  CHECK_THROWS_AS(codim1_residual_dim(parse_pattern_spec("A1")), std::invalid_argument);
}

// ============================================================
// restriction chains with embedded sign-pair patterns
// ============================================================

TEST_CASE("chains certify strict hyperplane excess at every level") {
  for (const std::string& spec : {"BC3", "BC4", "BC5", "BC6", "D4", "D5", "D6", "D7", "D8"}) {
    CAPTURE(spec);
    const Arrangement arr = parse_pattern_spec(spec);
    const ChainCertificate cert = successive_chain(arr);
    CHECK(cert.ok);
    REQUIRE(cert.levels.size() == arr.dim - 2);
    for (std::size_t i = 0; i < cert.levels.size(); ++i) {
      const ChainLevel& lv = cert.levels[i];
      const std::size_t d = arr.dim - 1 - i;
      CHECK(lv.subspace.dim == d);
      CHECK(lv.embedded_count == d * (d - 1));
      if (spec[0] == 'B')
        CHECK(lv.restricted_count == d * d);
      else
        CHECK(lv.restricted_count == d * d - d + 1);
    }
  }
}

TEST_CASE("the F4 chain restricts to 13 then 6 hyperplanes") {
  const ChainCertificate cert = successive_chain(build_irreducible("F4", 4));
  CHECK(cert.ok);
  REQUIRE(cert.levels.size() == 2);
  CHECK(cert.levels[0].subspace.dim == 3);
  CHECK(cert.levels[0].restricted_count == 13);
  CHECK(cert.levels[0].embedded_count == 6);
  CHECK(cert.levels[1].subspace.dim == 2);
  CHECK(cert.levels[1].restricted_count == 6);
  CHECK(cert.levels[1].embedded_count == 2);
}

TEST_CASE("chains are rejected for unsupported patterns") {
  CHECK_THROWS_AS(successive_chain(parse_pattern_spec("A4")), std::invalid_argument);
  CHECK_THROWS_AS(successive_chain(parse_pattern_spec("BC2")), std::invalid_argument);
  CHECK_THROWS_AS(successive_chain(parse_pattern_spec("A1xA1")), std::invalid_argument);
}

// ============================================================
// selectors and serialization
// ============================================================

TEST_CASE("hyperplane selectors in realization coordinates") {
  const Arrangement d4 = build_irreducible("D", 4);
  CHECK(d4.hyperplanes[select_hyperplane(d4, "x1=x2")].normal ==
        std::vector<Int>{1, -1, 0, 0});
  CHECK(d4.hyperplanes[select_hyperplane(d4, "x3 = -x4")].normal ==
        std::vector<Int>{0, 0, 1, 1});
  const Arrangement bc2 = build_irreducible("BC", 2);
  CHECK(bc2.hyperplanes[select_hyperplane(bc2, "x2=0")].normal == std::vector<Int>{0, 1});
  CHECK(select_hyperplane(bc2, "1,1") == select_hyperplane(bc2, "x1=-x2"));
  // Selectors act on realization coordinates, so type A uses R^{n+1}.
  const Arrangement a2 = build_irreducible("A", 2);
  CHECK(a2.hyperplanes[select_hyperplane(a2, "x1=x3")].normal == std::vector<Int>{1, 1});

  CHECK_THROWS_AS(select_hyperplane(d4, "x1=0"), std::invalid_argument);
  CHECK_THROWS_AS(select_hyperplane(d4, "x1=x1"), std::invalid_argument);
  CHECK_THROWS_AS(select_hyperplane(d4, "x9=0"), std::invalid_argument);
  CHECK_THROWS_AS(select_hyperplane(d4, "nonsense"), std::invalid_argument);
  CHECK_THROWS_AS(select_hyperplane(a2, "1,1,1"), std::invalid_argument);
}

TEST_CASE("serialization round-trips byte-identically") {
  for (const std::string& spec : {"A3", "BC2", "G2", "A1xBC2", "E6"}) {
    CAPTURE(spec);
    const Arrangement arr = parse_pattern_spec(spec);
    const std::string once = arrangement_to_json(arr).dump(2);
    const Arrangement back = arrangement_from_json(nlohmann::json::parse(once));
    CHECK(arrangement_to_json(back).dump(2) == once);
    CHECK(back.dim == arr.dim);
    CHECK(normal_set(back) == normal_set(arr));
  }
  const Arrangement res =
      restrict(build_irreducible("D", 4), hyperplane_subspace(build_irreducible("D", 4), 0));
  const std::string once = arrangement_to_json(res).dump(2);
  CHECK(arrangement_to_json(arrangement_from_json(nlohmann::json::parse(once))).dump(2) == once);
  CHECK_THROWS_AS(arrangement_from_json(nlohmann::json::object()), std::invalid_argument);
}
