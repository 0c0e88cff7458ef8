#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "qie/building.hpp"

using namespace qie;

namespace {

PadicScalar exact(long p, long x, int prec = 48) { return padic_from_integer(p, x, prec); }

PadicMatrix identity_frame(long p, int prec = 64) {
  PadicMatrix m(3, std::vector<PadicScalar>(3, padic_zero(p)));
  for (int i = 0; i < 3; ++i) m[i][i] = exact(p, 1, prec);
  return m;
}

PadicMatrix unipotent_frame(long p, long a, long b, int prec = 64) {
  PadicMatrix m = identity_frame(p, prec);
  m[0][1] = exact(p, a, prec);
  m[0][2] = exact(p, b, prec);
  return m;
}

LatticeClass diag_class(const PadicMatrix& frame, const std::array<long, 3>& a) {
  PadicMatrix m = frame;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[i][j] = padic_shift(m[i][j], a[j]);
  }
  return lattice_normal_form(m);
}

/// Two projective vectors name the same line iff all 2x2 minors vanish deeply.
bool same_line(const std::array<PadicScalar, 3>& u, const std::array<PadicScalar, 3>& v,
               long depth = 8) {
  const int idx[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (const auto& ij : idx) {
    PadicScalar m = padic_sub(padic_mul(u[ij[0]], v[ij[1]]), padic_mul(u[ij[1]], v[ij[0]]));
    if (!m.zero && m.val < depth) return false;
  }
  return true;
}

std::vector<TreeVertex> tree_ball(long p, long radius) {
  std::vector<TreeVertex> ball{tree_base_vertex(p, 40)};
  std::set<std::string> seen{lattice_key(ball[0].lattice)};
  std::size_t lo = 0;
  for (long r = 0; r < radius; ++r) {
    std::size_t hi = ball.size();
    for (std::size_t i = lo; i < hi; ++i) {
      for (auto& nb : tree_neighbors(ball[i])) {
        if (seen.insert(lattice_key(nb.lattice)).second) ball.push_back(nb);
      }
    }
    lo = hi;
  }
  return ball;
}

}  // namespace

TEST_CASE("normal form: base lattice, diagonal shapes, and scale invariance") {
  LatticeClass base = base_lattice(2, 3);
  CHECK(base.diag == std::vector<long>{0, 0, 0});

  PadicMatrix m = identity_frame(2);
  m[0][0] = exact(2, 2);
  LatticeClass L = lattice_normal_form(m);
  CHECK(L.diag == std::vector<long>{1, 0, 0});

  // Homothety: scaling every column by p^3 names the same class.
  PadicMatrix scaled = m;
  for (auto& row : scaled) {
    for (auto& e : row) e = padic_shift(e, 3);
  }
  CHECK(lattice_eq(lattice_normal_form(scaled), L));

  // Idempotence: the canonical basis normalizes to itself.
  CHECK(lattice_eq(lattice_normal_form(lattice_matrix(L)), L));

  // A basis needing a genuinely non-diagonal pivot: span{(p,0),(1,p)}.
  PadicMatrix tricky(2, std::vector<PadicScalar>(2, padic_zero(2)));
  tricky[0][0] = exact(2, 2);
  tricky[0][1] = exact(2, 1);
  tricky[1][1] = exact(2, 2);
  LatticeClass T = lattice_normal_form(tricky);
  CHECK(T.diag == std::vector<long>{1, 1});
  CHECK(T.upper[0][1] == 1);
}

TEST_CASE("normal form is invariant under integral column operations") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 100; ++trial) {
    // Random integral upper data on a random diagonal shape.
    std::array<long, 3> d{static_cast<long>(gen() % 4), static_cast<long>(gen() % 4),
                          static_cast<long>(gen() % 4)};
    PadicMatrix m = identity_frame(2, 48);
    for (int i = 0; i < 3; ++i) m[i][i] = padic_shift(m[i][i], d[i]);
    m[0][1] = exact(2, static_cast<long>(gen() % 16));
    m[0][2] = exact(2, static_cast<long>(gen() % 16));
    m[1][2] = exact(2, static_cast<long>(gen() % 16));
    LatticeClass L = lattice_normal_form(m);

    // Apply a few random integral column operations and a column swap.
    PadicMatrix w = m;
    for (int step = 0; step < 4; ++step) {
      int src = static_cast<int>(gen() % 3), dst = static_cast<int>(gen() % 3);
      if (src == dst) continue;
      long coeff = static_cast<long>(gen() % 7) - 3;
      for (int i = 0; i < 3; ++i) {
        w[i][dst] = padic_add(w[i][dst], padic_mul(exact(2, coeff, 48), w[i][src]));
      }
    }
    for (int i = 0; i < 3; ++i) std::swap(w[i][0], w[i][2]);
    CHECK(lattice_eq(lattice_normal_form(w), L));
  }
}

TEST_CASE("lattice json round trip") {
  PadicMatrix m = unipotent_frame(2, 3, 5);
  m[0][0] = exact(2, 4);
  m[1][1] = exact(2, 2);
  LatticeClass L = lattice_normal_form(m);
  nlohmann::ordered_json j = lattice_json(L);
  CHECK(j.at("schema") == "lattice/1");
  LatticeClass back = lattice_from_json(j);
  CHECK(lattice_eq(back, L));
  CHECK(lattice_json(back).dump() == j.dump());
}

TEST_CASE("relative position: shifts, antisymmetry, and adjacency") {
  LatticeClass base = base_lattice(2, 3);
  CHECK(relative_position(base, base).exp == std::vector<long>{0, 0, 0});

  PadicMatrix m = identity_frame(2);
  m[0][0] = exact(2, 2);
  LatticeClass L = lattice_normal_form(m);
  CHECK(relative_position(base, L).exp == std::vector<long>{1, 0, 0});
  CHECK(comb_distance_formula(base, L) == 1);
  CHECK(cat0_distance(base, L) == doctest::Approx(std::sqrt(2.0 / 3.0)));

  // Reversing the pair negates and reverses the exponents.
  std::mt19937_64 gen(7);
  std::vector<LatticeClass> samples{base, L};
  for (int i = 0; i < 6; ++i) {
    const LatticeClass& from = samples[gen() % samples.size()];
    auto nb = lattice_neighbors(from);
    samples.push_back(nb[gen() % nb.size()]);
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = 0; j < samples.size(); ++j) {
      auto ab = relative_position(samples[i], samples[j]).exp;
      auto ba = relative_position(samples[j], samples[i]).exp;
      REQUIRE(ab.size() == ba.size());
      for (std::size_t k = 0; k < ab.size(); ++k) {
        CHECK(ab[k] == -ba[ab.size() - 1 - k]);
      }
    }
  }
}

TEST_CASE("neighbor enumeration matches the building combinatorics") {
  // Rank 2: p + 1 neighbors.
  auto n2 = lattice_neighbors(base_lattice(2, 2));
  CHECK(n2.size() == 3);
  auto n3p3 = lattice_neighbors(base_lattice(3, 2));
  CHECK(n3p3.size() == 4);

  // Rank 3, p = 2: 7 + 7 = 14 neighbors, relative positions (1,0,0)/(1,1,0).
  LatticeClass base = base_lattice(2, 3);
  auto nb = lattice_neighbors(base);
  CHECK(nb.size() == 14);
  int lines = 0, planes = 0;
  for (const auto& v : nb) {
    auto rp = relative_position(base, v).exp;
    if (rp == std::vector<long>{1, 0, 0}) ++lines;
    if (rp == std::vector<long>{1, 1, 0}) ++planes;
    CHECK(comb_distance_formula(base, v) == 1);
  }
  CHECK(lines == 7);
  CHECK(planes == 7);

  // Neighboring is symmetric: the base appears among each neighbor's neighbors.
  for (const auto& v : nb) {
    bool found = false;
    for (const auto& w : lattice_neighbors(v)) found = found || lattice_eq(w, base);
    CHECK(found);
  }
}

TEST_CASE("skeleton distance: formula equals breadth-first search") {
  LatticeClass base = base_lattice(2, 3);

  // Exhaustive: distances from the base over a two-step ball.
  std::vector<LatticeClass> ball{base};
  std::vector<long> depth{0};
  std::set<std::string> seen{lattice_key(base)};
  std::size_t lo = 0;
  for (long r = 0; r < 2; ++r) {
    std::size_t hi = ball.size();
    for (std::size_t i = lo; i < hi; ++i) {
      for (const auto& nb : lattice_neighbors(ball[i])) {
        if (seen.insert(lattice_key(nb)).second) {
          ball.push_back(nb);
          depth.push_back(r + 1);
        }
      }
    }
    lo = hi;
  }
  for (std::size_t i = 0; i < ball.size(); ++i) {
    CHECK(comb_distance_formula(base, ball[i]) == depth[i]);
  }

  // Sampled pairs off the base point.
  std::mt19937_64 gen(13);
  auto walk = [&](int steps) {
    LatticeClass v = base;
    for (int s = 0; s < steps; ++s) {
      auto nb = lattice_neighbors(v);
      v = nb[gen() % nb.size()];
    }
    return v;
  };
  for (int trial = 0; trial < 20; ++trial) {
    LatticeClass a = walk(static_cast<int>(gen() % 3));
    LatticeClass b = walk(static_cast<int>(gen() % 3));
    long want = comb_distance_formula(a, b);
    CHECK(comb_distance_bfs(a, b, 10) == want);
  }

  // The two metrics are uniformly comparable.
  for (int trial = 0; trial < 50; ++trial) {
    LatticeClass a = walk(static_cast<int>(gen() % 3));
    LatticeClass b = walk(static_cast<int>(gen() % 3));
    double cat = cat0_distance(a, b);
    double comb = static_cast<double>(comb_distance_formula(a, b));
    CHECK(cat >= std::sqrt(0.5) * comb - 1e-12);
    CHECK(cat <= std::sqrt(2.0 / 3.0) * comb + 1e-12);
  }
}

TEST_CASE("apartment and sector distances match brute-force enumeration") {
  std::mt19937_64 gen(41);
  std::vector<PadicMatrix> frames = {identity_frame(2), unipotent_frame(2, 1, 1)};
  {
    PadicMatrix g(3, std::vector<PadicScalar>(3, padic_zero(2)));
    long vals[3][3] = {{1, 2, 3}, {1, 1, 4}, {0, 1, 2}};  // det -3, a 2-adic unit
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (vals[i][j] != 0) g[i][j] = exact(2, vals[i][j]);
      }
    }
    frames.push_back(g);
  }
  const std::array<int, 3> orders[3] = {{0, 1, 2}, {2, 0, 1}, {1, 2, 0}};
  for (const auto& frame : frames) {
    for (int trial = 0; trial < 8; ++trial) {
      // A point near the apartment: diagonal point plus a short random walk.
      std::array<long, 3> a0{0, static_cast<long>(gen() % 5) - 2,
                             static_cast<long>(gen() % 5) - 2};
      LatticeClass x = diag_class(frame, a0);
      int steps = static_cast<int>(gen() % 3);
      for (int s = 0; s < steps; ++s) {
        auto nb = lattice_neighbors(x);
        x = nb[gen() % nb.size()];
      }
      // Oracle: scan diagonal classes of the frame over a window.
      long best_free = 1 << 20;
      std::array<long, 3> probe{};
      std::vector<long> best_cone(3, 1 << 20);
      for (long b = -6; b <= 6; ++b) {
        for (long c = -6; c <= 6; ++c) {
          probe = {0, b, c};
          long d = comb_distance_formula(x, diag_class(frame, probe));
          best_free = std::min(best_free, d);
          for (int o = 0; o < 3; ++o) {
            const auto& ord = orders[o];
            if (probe[ord[0]] >= probe[ord[1]] && probe[ord[1]] >= probe[ord[2]]) {
              best_cone[o] = std::min(best_cone[o], d);
            }
          }
        }
      }
      CHECK(apartment_distance(x, frame) == best_free);
      for (int o = 0; o < 3; ++o) {
        CHECK(sector_distance(x, frame, orders[o]) == best_cone[o]);
      }
    }
  }
}

TEST_CASE("tree layer: charts, neighbors, ball growth, distances") {
  TreeVertex base = tree_base_vertex(2);
  TreeChart c = tree_chart(base);
  CHECK(c.level == 0);
  CHECK(padic_is_zero(c.x));
  CHECK(tree_level(base) == 0);

  auto nb = tree_neighbors(base);
  CHECK(nb.size() == 3);
  std::set<std::pair<long, long>> chart_set;
  for (const auto& v : nb) {
    TreeChart cc = tree_chart(v);
    long digits = cc.x.zero ? 0 : padic_residue(cc.x, cc.level).convert_to<long>();
    chart_set.insert({cc.level, digits});
  }
  CHECK(chart_set == std::set<std::pair<long, long>>{{-1, 0}, {1, 0}, {1, 1}});

  // Ball sizes of the 3-regular tree: |B(r)| = 3 * 2^r - 2.
  auto b7 = tree_ball(2, 7);
  auto b8 = tree_ball(2, 8);
  CHECK(b7.size() == 3 * (1 << 7) - 2);
  CHECK(b8.size() == 3 * (1 << 8) - 2);

  // Chart round trip and distance formula vs. BFS.
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 30; ++trial) {
    const TreeVertex& a = b8[gen() % b8.size()];
    const TreeVertex& b = b8[gen() % b8.size()];
    TreeChart ca = tree_chart(a);
    CHECK(lattice_eq(tree_vertex(2, ca.level, ca.x, 40).lattice, a.lattice));
    long want = tree_distance(a, b);
    CHECK(want == comb_distance_formula(a.lattice, b.lattice));
    CHECK(want == comb_distance_bfs(a.lattice, b.lattice, 20));
  }
}

TEST_CASE("tree self-embedding: pinned images of known vertices") {
  auto image_of = [](long level, const PadicScalar& x) {
    return tree_chart(qi_self_embedding_tree(tree_vertex(2, level, x, 48)));
  };
  auto check_img = [](const TreeChart& img, long level, long digits) {
    CHECK(img.level == level);
    Int got = img.x.zero ? Int(0) : padic_residue(img.x, img.level);
    CHECK(got == digits);
  };
  // Base vertex gains a leading zero digit.
  check_img(image_of(0, padic_zero(2)), 1, 0);
  // Integer translations double (one prepended 0 digit).
  check_img(image_of(2, exact(2, 3)), 3, 6);
  // Vertices on the ray toward the marked end land on all-ones prefixes.
  check_img(image_of(-3, padic_zero(2)), 3, 7);
  check_img(image_of(-2, padic_dyadic(2, 1, 2)), 2, 3);  // same vertex as (-2, 0)
  // Negative-valuation translations get the prefix 1^k 0.
  check_img(image_of(1, padic_dyadic(2, 1, 1)), 4, 5);
  check_img(image_of(0, padic_dyadic(2, 1, 1)), 3, 5);
}

TEST_CASE("tree self-embedding: injective on a ball, image avoids the marked end") {
  auto ball = tree_ball(2, 6);
  CHECK(ball.size() == 3 * (1 << 6) - 2);
  std::set<std::string> images;
  for (const auto& v : ball) {
    TreeVertex img = qi_self_embedding_tree(v);
    CHECK(tree_level(img) >= 1);
    images.insert(lattice_key(img.lattice));
  }
  CHECK(images.size() == ball.size());
}

TEST_CASE("tree self-embedding: exhaustive two-sided bounds on the radius-12 ball") {
  TreeEmbeddingCheck chk = certify_tree_embedding(12, 3.0, 8.0);
  CHECK(chk.vertices == 3 * (1 << 12) - 2);
  CHECK(chk.pairs == static_cast<long long>(chk.vertices) * (chk.vertices - 1) / 2);
  CHECK(chk.upper_violations == 0);
  CHECK(chk.lower_violations == 0);
  CHECK(chk.min_image_level >= 1);
}

TEST_CASE("discrete AN-map: base point, horocycles, and vertical rays") {
  TreeVertex tb = tree_base_vertex(2, 48);
  CHECK(lattice_eq(an_map_p(tb, tb), base_lattice(2, 3)));

  // Horocyclic moves are carried isometrically: two sources at the same
  // level map to classes at exactly the source tree distance.
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 40; ++trial) {
    long t = 1 + static_cast<long>(gen() % 5);
    long w = static_cast<long>(gen() % 4);
    Int x1 = Int(gen() % (1ULL << t));
    Int x2 = Int(gen() % (1ULL << t));
    TreeVertex u1 = tree_vertex(2, t, padic_from_integer(2, x1, 48), 48);
    TreeVertex u2 = tree_vertex(2, t, padic_from_integer(2, x2, 48), 48);
    TreeVertex wv = tree_vertex(2, 2, exact(2, w), 48);
    long src = tree_distance(u1, u2);
    long img = comb_distance_formula(an_map_p(u1, wv), an_map_p(u2, wv));
    CHECK(img == src);
  }

  // The diagonal vertical ray maps to collinear positions (t, 0, 0).
  auto at = [&](long t) {
    TreeVertex v = tree_vertex(2, t, padic_zero(2), 48);
    return an_map_p(v, v);
  };
  CHECK(relative_position(at(0), at(4)).exp == std::vector<long>{4, 0, 0});
  CHECK(comb_distance_formula(at(0), at(2)) + comb_distance_formula(at(2), at(4)) ==
        comb_distance_formula(at(0), at(4)));
  CHECK(cat0_distance(at(0), at(2)) + cat0_distance(at(2), at(4)) ==
        doctest::Approx(cat0_distance(at(0), at(4))));
}

TEST_CASE("discrete AN-map: a vertical flat lands in exactly one apartment") {
  PadicMatrix good = unipotent_frame(2, 3, 5);
  PadicMatrix wrong = identity_frame(2);
  for (long t = -4; t <= 4; ++t) {
    for (long s = -4; s <= 4; ++s) {
      TreeVertex u = tree_vertex(2, t, exact(2, 3), 48);
      TreeVertex w = tree_vertex(2, s, exact(2, 5), 48);
      LatticeClass img = an_map_p(u, w);
      CHECK(apartment_distance(img, good) == 0);
    }
  }
  // The identity frame misses the deep corner by min(t, s) - v(x0).
  TreeVertex u = tree_vertex(2, 4, exact(2, 3), 48);
  TreeVertex w = tree_vertex(2, 4, exact(2, 5), 48);
  CHECK(apartment_distance(an_map_p(u, w), wrong) == 4);
}

TEST_CASE("flat sampling is deterministic and well-separated") {
  auto [g1, g2] = sample_tree_flat(99);
  auto [h1, h2] = sample_tree_flat(99);
  CHECK(g1.a.num == h1.a.num);
  CHECK(g1.b.num == h1.b.num);
  CHECK(g2.a.num == h2.a.num);
  CHECK(g2.b.den_exp == h2.b.den_exp);
  for (const auto& g : {g1, g2}) {
    PadicScalar ea = padic_dyadic(2, g.a.num, g.a.den_exp, 48);
    PadicScalar eb = padic_dyadic(2, g.b.num, g.b.den_exp, 48);
    PadicScalar diff = padic_sub(ea, eb);
    REQUIRE_FALSE(padic_is_zero(diff));
    CHECK(padic_valuation(diff) <= 2);
  }
  // Geodesic vertices: the chart level dips to the meet and rises with |u|.
  TreeVertex v0 = tree_geodesic_vertex(2, g1, 0, 64);
  TreeVertex v3 = tree_geodesic_vertex(2, g1, 3, 64);
  TreeVertex vm3 = tree_geodesic_vertex(2, g1, -3, 64);
  CHECK(tree_distance(v0, v3) == 3);
  CHECK(tree_distance(v0, vm3) == 3);
  CHECK(tree_distance(vm3, v3) == 6);
}

TEST_CASE("baseline control: vertical flat under the discrete AN-map") {
  BuildingNonrigidOptions opt;
  opt.radii = {8, 16};
  BuildingNonrigidReport rep = building_anmap_baseline(exact(2, 3), exact(2, 5), opt);
  CHECK(rep.raw_flags == 8);
  CHECK(rep.flags.size() == 6);
  CHECK(rep.common_frame);
  CHECK(rep.frame_margin >= opt.match_val);
  for (long sup : rep.union_sup) CHECK(sup == 0);

  // The flag lines are exactly the three frame directions.
  std::array<PadicScalar, 3> l1 = {exact(2, 1), padic_zero(2), padic_zero(2)};
  std::array<PadicScalar, 3> l2 = {exact(2, 3), exact(2, 1), padic_zero(2)};
  std::array<PadicScalar, 3> l3 = {exact(2, 5), padic_zero(2), exact(2, 1)};
  for (const auto& f : rep.flags) {
    bool hit = same_line(f.line, l1) || same_line(f.line, l2) || same_line(f.line, l3);
    CHECK(hit);
  }
}

TEST_CASE("composed map: eight flags, no common frame, bounded sector union") {
  auto [g1, g2] = sample_tree_flat(7);
  BuildingNonrigidOptions opt;
  opt.radii = {8, 16};
  BuildingNonrigidReport rep = building_nonrigid_report(g1, g2, opt);
  CHECK(rep.raw_flags == 8);
  CHECK(rep.flags.size() == 8);
  CHECK_FALSE(rep.common_frame);
  CHECK(rep.frame_margin < opt.match_val);
  REQUIRE(rep.union_sup.size() == 2);
  for (long sup : rep.union_sup) {
    CHECK(sup <= 8);
  }
  REQUIRE(rep.apartment_floor.size() == 2);
  for (std::size_t i = 0; i < rep.radii.size(); ++i) {
    CHECK(static_cast<double>(rep.apartment_floor[i]) >=
          0.1 * static_cast<double>(rep.radii[i]));
  }
  CHECK(rep.candidate_count >= 68);

  // Deterministic JSON serialization.
  CHECK(building_report_json(rep).dump() == building_report_json(rep).dump());
  nlohmann::ordered_json j = building_report_json(rep);
  CHECK(j.at("schema") == "building-nonrigid/1");
  CHECK(j.at("common_frame") == false);
}
