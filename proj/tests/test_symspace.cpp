#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "qie/sampling.hpp"
#include "qie/symspace.hpp"

using namespace qie;

namespace {

using Cplx = std::complex<double>;

constexpr double kSqrt2 = 1.41421356237309504880168872;

SymPoint random_point(std::mt19937_64& gen, int n, bool complex_field) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = std::exp(uniform_in(gen, -1.5, 1.5));
    for (int j = i + 1; j < n; ++j) {
      const double re = uniform_in(gen, -2.0, 2.0);
      const double im = complex_field ? uniform_in(gen, -2.0, 2.0) : 0.0;
      m(i, j) = Cplx(re, im);
    }
  }
  return make_sym_point(std::move(m), complex_field);
}

Eigen::MatrixXcd random_invertible(std::mt19937_64& gen, int n) {
  while (true) {
    Eigen::MatrixXcd g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = Cplx(unit_normal(gen), unit_normal(gen));
    if (std::abs(g.determinant()) > 0.1) return g;
  }
}

/// Independent distance computation: the squared singular values of
/// rep(p)^{-1} rep(q) are the generalized eigenvalues of the pencil
/// (rep(q) rep(q)^H, rep(p) rep(p)^H).
double dist_via_pencil(const SymPoint& p, const SymPoint& q) {
  const Eigen::MatrixXcd pp = p.rep * p.rep.adjoint();
  const Eigen::MatrixXcd pq = q.rep * q.rep.adjoint();
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> ges(pq, pp);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ges.eigenvalues().size(); ++i) {
    const double l = std::log(ges.eigenvalues()(i));
    acc += l * l;
  }
  return 0.5 * std::sqrt(acc);
}

H2Point random_h2(std::mt19937_64& gen, double box) {
  return H2Point{uniform_in(gen, -box, box), uniform_in(gen, -box, box)};
}

}  // namespace

TEST_CASE("coset representatives are validated and normalized") {
  CHECK_THROWS_AS(make_sym_point(Eigen::MatrixXcd::Identity(4, 4), false),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_sym_point(Eigen::MatrixXcd::Identity(2, 3), false),
                  std::invalid_argument);

  Eigen::MatrixXcd lower = Eigen::MatrixXcd::Identity(3, 3);
  lower(2, 0) = 0.5;
  CHECK_THROWS_AS(make_sym_point(lower, false), std::invalid_argument);

  Eigen::MatrixXcd negative = Eigen::MatrixXcd::Identity(3, 3);
  negative(1, 1) = -1.0;
  CHECK_THROWS_AS(make_sym_point(negative, false), std::invalid_argument);

  Eigen::MatrixXcd zero_diag = Eigen::MatrixXcd::Identity(3, 3);
  zero_diag(0, 0) = 0.0;
  CHECK_THROWS_AS(make_sym_point(zero_diag, false), std::invalid_argument);

  Eigen::MatrixXcd imaginary = Eigen::MatrixXcd::Identity(2, 2);
  imaginary(0, 1) = Cplx(0.0, 1.0);
  CHECK_THROWS_AS(make_sym_point(imaginary, false), std::invalid_argument);
  CHECK_NOTHROW(make_sym_point(imaginary, true));

  Eigen::MatrixXcd bad = Eigen::MatrixXcd::Identity(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(make_sym_point(bad, true), std::invalid_argument);

  // Determinant renormalization.
  const SymPoint doubled = make_sym_point(2.0 * Eigen::MatrixXcd::Identity(3, 3), false);
  CHECK((doubled.rep - Eigen::MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(doubled.n == 3);
}

TEST_CASE("distance basics: normalization, symmetry, positivity") {
  const SymPoint id = sym_identity(3, false);
  CHECK(dist_sym(id, id) <= 1e-15);

  Eigen::MatrixXcd diag = Eigen::MatrixXcd::Zero(3, 3);
  diag(0, 0) = std::exp(1.0);
  diag(1, 1) = 1.0;
  diag(2, 2) = std::exp(-1.0);
  const SymPoint stretched = make_sym_point(diag, false);
  CHECK(dist_sym(id, stretched) == doctest::Approx(kSqrt2).epsilon(1e-12));

  std::mt19937_64 gen(41);
  for (int trial = 0; trial < 100; ++trial) {
    const SymPoint p = random_point(gen, 3, true);
    const SymPoint q = random_point(gen, 3, true);
    CHECK(std::abs(dist_sym(p, q) - dist_sym(q, p)) <= 1e-12);
    CHECK(dist_sym(p, q) >= 0.0);
  }

  // Distinct points are separated.
  Eigen::MatrixXcd shifted = Eigen::MatrixXcd::Identity(3, 3);
  shifted(0, 1) = 0.25;
  CHECK(dist_sym(id, make_sym_point(shifted, false)) > 1e-3);

  CHECK_THROWS_AS(dist_sym(id, sym_identity(2, false)), std::invalid_argument);
  CHECK_THROWS_AS(dist_sym(id, sym_identity(3, true)), std::invalid_argument);
}

TEST_CASE("distance is invariant under left translation") {
  std::mt19937_64 gen(42);
  for (int trial = 0; trial < 150; ++trial) {
    const SymPoint p = random_point(gen, 3, true);
    const SymPoint q = random_point(gen, 3, true);
    const double base = dist_sym(p, q);

    // Triangular translations via sym_translate...
    const SymPoint g = random_point(gen, 3, true);
    CHECK(std::abs(dist_sym(sym_translate(g, p), sym_translate(g, q)) - base) <= 1e-9);

    // ...and general ones via the Iwasawa decomposition.
    const Eigen::MatrixXcd h = random_invertible(gen, 3);
    const SymPoint hp = iwasawa_point(h * p.rep, true);
    const SymPoint hq = iwasawa_point(h * q.rep, true);
    CHECK(std::abs(dist_sym(hp, hq) - base) <= 1e-9);
  }
}

TEST_CASE("distance satisfies the triangle inequality") {
  std::mt19937_64 gen(43);
  for (const bool complex_field : {false, true}) {
    for (int trial = 0; trial < 500; ++trial) {
      const SymPoint p = random_point(gen, 3, complex_field);
      const SymPoint q = random_point(gen, 3, complex_field);
      const SymPoint r = random_point(gen, 3, complex_field);
      CHECK(dist_sym(p, r) <= dist_sym(p, q) + dist_sym(q, r) + 1e-9);
    }
  }
}

TEST_CASE("distance agrees with the generalized-eigenvalue computation") {
  std::mt19937_64 gen(44);
  for (int trial = 0; trial < 200; ++trial) {
    const bool complex_field = (trial % 2) == 0;
    const SymPoint p = random_point(gen, 3, complex_field);
    const SymPoint q = random_point(gen, 3, complex_field);
    CHECK(std::abs(dist_sym(p, q) - dist_via_pencil(p, q)) <= 1e-8);
  }
}

TEST_CASE("iwasawa decomposition recovers the triangular representative") {
  std::mt19937_64 gen(45);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXcd g0 = random_invertible(gen, 3);
    const Eigen::MatrixXcd g = g0 / std::pow(std::abs(g0.determinant()), 1.0 / 3.0);
    const SymPoint h = iwasawa_point(g, true);
    // The unitary factor h^{-1} g.
    const Eigen::MatrixXcd u = h.rep.inverse() * g;
    CHECK((u.adjoint() * u - Eigen::MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff() <=
          1e-9);
  }
  // Idempotence on triangular input.
  const SymPoint p = random_point(gen, 3, true);
  const SymPoint again = iwasawa_point(p.rep, true);
  CHECK((p.rep - again.rep).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK_THROWS_AS(iwasawa_point(Eigen::MatrixXcd::Zero(3, 3), true),
                  std::invalid_argument);
}

TEST_CASE("half-plane charts match the matrix model") {
  std::mt19937_64 gen(46);
  for (int trial = 0; trial < 200; ++trial) {
    const H2Point a = random_h2(gen, 2.5);
    const H2Point b = random_h2(gen, 2.5);
    CHECK(std::abs(dist_h2(a, b) - dist_sym(h2_rep(a), h2_rep(b))) <= 1e-10);

    const H3Point az{a.t, Cplx(a.x, uniform_in(gen, -2.0, 2.0))};
    const H3Point bz{b.t, Cplx(b.x, uniform_in(gen, -2.0, 2.0))};
    CHECK(std::abs(dist_h3(az, bz) - dist_sym(h3_rep(az), h3_rep(bz))) <= 1e-10);

    const H3Point round = h3_coords(h3_rep(az));
    CHECK(std::abs(round.t - az.t) <= 1e-12);
    CHECK(std::abs(round.z - az.z) <= 1e-12);
  }
  CHECK_THROWS_AS(h3_coords(sym_identity(3, true)), std::invalid_argument);
}

TEST_CASE("an_map has the advertised matrix form") {
  const SymPoint base = an_map(H2Point{0.0, 0.0}, H2Point{0.0, 0.0});
  CHECK((base.rep - Eigen::MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-15);

  // Moving only the first height coordinate travels along the xi1 ray.
  const double tau = 0.9;
  const SymPoint moved = an_map(H2Point{tau, 0.0}, H2Point{0.0, 0.0});
  const BoundaryPointSpec xi1 = BoundaryPointSpec::xi1();
  Eigen::MatrixXcd expo = Eigen::MatrixXcd::Zero(3, 3);
  for (int i = 0; i < 3; ++i) expo(i, i) = std::exp(tau * xi1.generator(i));
  CHECK((moved.rep - expo).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(dist_sym(sym_identity(3, false), moved) ==
        doctest::Approx(tau * xi1.speed()).epsilon(1e-12));

  // The image is the product of the unipotent part and the diagonal part.
  std::mt19937_64 gen(47);
  for (int trial = 0; trial < 300; ++trial) {
    const double t = uniform_in(gen, -3.0, 3.0), s = uniform_in(gen, -3.0, 3.0);
    const Cplx x(uniform_in(gen, -3.0, 3.0), uniform_in(gen, -3.0, 3.0));
    const Cplx z(uniform_in(gen, -3.0, 3.0), uniform_in(gen, -3.0, 3.0));
    const SymPoint image = an_map(H3Point{t, x}, H3Point{s, z});
    Eigen::MatrixXcd unipotent = Eigen::MatrixXcd::Identity(3, 3);
    unipotent(0, 1) = x;
    unipotent(0, 2) = z;
    Eigen::MatrixXcd diag = Eigen::MatrixXcd::Zero(3, 3);
    diag(0, 0) = std::exp((2.0 / 3.0) * (t + s));
    diag(1, 1) = std::exp((2.0 / 3.0) * (s - 2.0 * t));
    diag(2, 2) = std::exp((2.0 / 3.0) * (t - 2.0 * s));
    const SymPoint product = make_sym_point(unipotent * diag, true);
    CHECK(dist_sym(image, product) <= 1e-12);
  }
}

TEST_CASE("an_map distortion on vertical flats stays within the predicted bounds") {
  std::mt19937_64 gen(48);
  const double lo = std::sqrt(2.0 / 3.0) - 1e-9, hi = kSqrt2 + 1e-9;
  for (int trial = 0; trial < 300; ++trial) {
    const double x0 = uniform_in(gen, -2.0, 2.0), z0 = uniform_in(gen, -2.0, 2.0);
    const H2Point p1{uniform_in(gen, -3.0, 3.0), x0}, q1{uniform_in(gen, -3.0, 3.0), x0};
    const H2Point p2{uniform_in(gen, -3.0, 3.0), z0}, q2{uniform_in(gen, -3.0, 3.0), z0};
    const double ds = std::hypot(dist_h2(p1, q1), dist_h2(p2, q2));
    if (ds < 1e-9) continue;
    const double dd = dist_sym(an_map(p1, p2), an_map(q1, q2));
    CHECK(dd / ds >= lo);
    CHECK(dd / ds <= hi);
  }

  // Pairs moving only one horocycle coordinate are carried isometrically.
  for (int trial = 0; trial < 100; ++trial) {
    const double t = uniform_in(gen, -2.0, 2.0), s = uniform_in(gen, -2.0, 2.0);
    const double z0 = uniform_in(gen, -2.0, 2.0);
    const H2Point p1{t, uniform_in(gen, -3.0, 3.0)}, q1{t, uniform_in(gen, -3.0, 3.0)};
    const double dd = dist_sym(an_map(p1, H2Point{s, z0}), an_map(q1, H2Point{s, z0}));
    CHECK(std::abs(dd - dist_h2(p1, q1)) <= 1e-10);
  }
}

TEST_CASE("boundary ray generators are traceless with the stated speed") {
  const BoundaryPointSpec xi1 = BoundaryPointSpec::xi1();
  const BoundaryPointSpec xi2 = BoundaryPointSpec::xi2();
  CHECK(xi1.label == "xi1");
  CHECK(xi2.label == "xi2");
  CHECK(std::abs(xi1.generator.sum()) <= 1e-15);
  CHECK(std::abs(xi2.generator.sum()) <= 1e-15);
  CHECK(xi1.speed() == doctest::Approx(2.0 * std::sqrt(6.0) / 3.0).epsilon(1e-14));
  CHECK(xi2.speed() == doctest::Approx(2.0 * std::sqrt(6.0) / 3.0).epsilon(1e-14));
}

TEST_CASE("asymptote distance vanishes along equivalent rays") {
  const SymPoint id = sym_identity(3, false);
  const BoundaryPointSpec xi1 = BoundaryPointSpec::xi1();
  const BoundaryPointSpec xi2 = BoundaryPointSpec::xi2();

  // A point further along the same ray.
  const SymPoint along = an_map(H2Point{2.5, 0.0}, H2Point{0.0, 0.0});
  const AsymptoteResult same_ray = asymptote_distance(id, along, xi1);
  CHECK(same_ray.converged);
  CHECK(same_ray.value <= 1e-6);

  // Differences confined to the first factor are invisible to xi1 ...
  std::mt19937_64 gen(49);
  for (int trial = 0; trial < 3; ++trial) {
    const H2Point second{uniform_in(gen, -1.0, 1.0), uniform_in(gen, -1.0, 1.0)};
    const SymPoint p = an_map(random_h2(gen, 1.5), second);
    const SymPoint q = an_map(random_h2(gen, 1.5), second);
    const AsymptoteResult res = asymptote_distance(p, q, xi1);
    CHECK(res.converged);
    CHECK(res.value <= 1e-6);
  }
  // ... and differences confined to the second factor are invisible to xi2.
  for (int trial = 0; trial < 3; ++trial) {
    const H2Point first{uniform_in(gen, -1.0, 1.0), uniform_in(gen, -1.0, 1.0)};
    const SymPoint p = an_map(first, random_h2(gen, 1.5));
    const SymPoint q = an_map(first, random_h2(gen, 1.5));
    const AsymptoteResult res = asymptote_distance(p, q, xi2);
    CHECK(res.converged);
    CHECK(res.value <= 1e-6);
  }
}

TEST_CASE("asymptote distances recover the distance in the opposite factor") {
  std::mt19937_64 gen(50);
  const BoundaryPointSpec xi1 = BoundaryPointSpec::xi1();
  const BoundaryPointSpec xi2 = BoundaryPointSpec::xi2();
  for (int trial = 0; trial < 8; ++trial) {
    const H2Point a1 = random_h2(gen, 1.5), a2 = random_h2(gen, 1.5);
    const H2Point b1 = random_h2(gen, 1.5), b2 = random_h2(gen, 1.5);
    const SymPoint p = an_map(a1, a2);
    const SymPoint q = an_map(b1, b2);

    const AsymptoteResult via1 = asymptote_distance(p, q, xi1);
    CHECK(via1.converged);
    CHECK(std::abs(via1.value - dist_h2(a2, b2)) <= 1e-3);

    const AsymptoteResult via2 = asymptote_distance(p, q, xi2);
    CHECK(via2.converged);
    CHECK(std::abs(via2.value - dist_h2(a1, b1)) <= 1e-3);
  }
}

TEST_CASE("asymptote plateau test flags short horizons") {
  const SymPoint p = sym_identity(3, false);
  const SymPoint q = an_map(H2Point{0.0, 10.0}, H2Point{0.0, 0.0});
  AsymptoteOptions opts;
  opts.horizon = 0.5;
  const AsymptoteResult res = asymptote_distance(p, q, BoundaryPointSpec::xi1(), opts);
  CHECK_FALSE(res.converged);

  CHECK_THROWS_AS(asymptote_distance(sym_identity(2, false), sym_identity(2, false),
                                     BoundaryPointSpec::xi1()),
                  std::invalid_argument);
}

TEST_CASE("distortion fit: exact isometries give the unit knee") {
  std::vector<std::pair<double, double>> pairs;
  for (int k = 1; k <= 40; ++k) pairs.emplace_back(0.25 * k, 0.25 * k);
  const QiFitResult fit = fit_qi_constants(pairs);
  CHECK(fit.knee_l == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.knee_c <= 1e-12);
  CHECK(fit.l == doctest::Approx(1.05).epsilon(1e-12));
  CHECK(fit.c == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(fit.train_violations == 0);
  CHECK(fit.frontier.size() == 97);
}

TEST_CASE("distortion fit: similarities appear on the frontier") {
  std::vector<std::pair<double, double>> pairs;
  for (int k = 1; k <= 40; ++k) pairs.emplace_back(0.25 * k, 0.5 * k);
  const QiFitResult fit = fit_qi_constants(pairs);
  bool found = false;
  for (const auto& pt : fit.frontier)
    if (std::abs(pt.l - 2.0) <= 1e-9 && pt.c <= 1e-9) found = true;
  CHECK(found);

  CHECK_THROWS_AS(fit_qi_constants({}), std::invalid_argument);
  CHECK_THROWS_AS(fit_qi_constants({{1.0, -2.0}}), std::invalid_argument);
}

TEST_CASE("distortion fit: sampled embedding pairs give certified constants") {
  const auto train = sample_an_map_pairs(11, 3000, 4.0);
  const auto train_again = sample_an_map_pairs(11, 3000, 4.0);
  REQUIRE(train.size() == 3000);
  CHECK(train == train_again);  // seeded sampling is reproducible

  const QiFitResult fit = fit_qi_constants(train);
  CHECK(fit.l <= 2.5);
  CHECK(fit.c <= 10.0);
  CHECK(fit.train_violations == 0);
  CHECK(fit.knee_l >= 1.2);
  CHECK(fit.knee_l <= 2.0);

  const auto held_out = sample_an_map_pairs(12, 3000, 4.0);
  CHECK(count_qi_violations(held_out, fit.l, fit.c) == 0);
}

TEST_CASE("vertical flats land inside a single flat with one wall crossing") {
  const VerticalFlatReport centered = vertical_flat_report(0.0, 0.0);
  CHECK(centered.max_residual <= 1e-12);
  CHECK(centered.wall_crossings == 1);
  CHECK(centered.single_flat);

  const VerticalFlatReport generic = vertical_flat_report(0.7, -0.3);
  CHECK(generic.max_residual <= 1e-9);
  CHECK(generic.wall_crossings == 1);
  CHECK(generic.single_flat);

  const nlohmann::ordered_json j = vertical_report_json(generic);
  CHECK(j["schema"] == "anmap-flat/1");
  CHECK(j["single_flat"] == true);
  CHECK(j["wall_crossings"] == 1);

  CHECK_THROWS_AS(vertical_flat_report(0.0, 0.0, VerticalFlatOptions{-1.0, 32, 1001, 1e-9}),
                  std::invalid_argument);
}

TEST_CASE("embedding the plane into three-space is isometric with bounded height") {
  std::mt19937_64 gen(51);
  for (int trial = 0; trial < 100; ++trial) {
    const H2Point a = random_h2(gen, 2.5);
    const H2Point b = random_h2(gen, 2.5);
    CHECK(std::abs(dist_sym(embed_h2_in_h3(a), embed_h2_in_h3(b)) - dist_h2(a, b)) <=
          1e-9);
  }
  // The height toward the end at infinity stays bounded: the triangular
  // representative has top diagonal entry at most 1.
  for (int k = 0; k < 20; ++k) {
    const H2Point far{0.3 * k, 0.7 * k - 5.0};
    const double h11 = embed_h2_in_h3(far).rep(0, 0).real();
    CHECK(kSqrt2 * std::log(h11) <= 1e-6);
  }
  // The basepoint sits at the top of the image hemisphere.
  const H3Point top = h3_coords(embed_h2_in_h3(H2Point{0.0, 0.0}));
  CHECK(std::abs(top.t) <= 1e-12);
  CHECK(std::abs(top.z) <= 1e-12);

  // Composing with the embedding keeps points well defined.
  const SymPoint img = nonrigid_map(H2Point{0.4, -0.2}, H2Point{-0.1, 0.3});
  CHECK(img.n == 3);
  CHECK(img.complex_field);
  CHECK(dist_sym(img, img) <= 1e-15);
}

namespace {

NonrigidOptions reduced_options() {
  NonrigidOptions opt;
  opt.flag_horizon = 16.0;
  opt.radii = {4.0, 8.0};
  opt.cloud_ring = 12;
  opt.cloud_inner = 6;
  opt.candidate_random = 4;
  opt.refine_sweeps = 1;
  opt.refine_cloud = 8;
  return opt;
}

}  // namespace

TEST_CASE("baseline flat report finds one compatible frame and no growth") {
  const NonrigidFlatReport report = anmap_flat_baseline(0.3, -0.7, reduced_options());
  CHECK(report.raw_flags == 8);
  CHECK(report.flags.size() == 6);
  CHECK(report.common_frame);
  CHECK(report.frame_margin <= 0.05);
  REQUIRE(report.flat_distance.size() == 2);
  CHECK(report.flat_distance[0] <= 0.05);
  CHECK(report.flat_distance[1] <= 0.05);
  CHECK(std::abs(report.growth_slope) <= 0.01);
}

TEST_CASE("composed flat report shows eight flags, no common frame, and growth") {
  const NonrigidFlatSpec spec = sample_nonrigid_flat(3);
  CHECK(spec.radius1 >= 1.0);
  CHECK(spec.radius1 <= 2.0);
  CHECK(spec.radius2 >= 1.0);
  CHECK(spec.radius2 <= 2.0);

  const NonrigidFlatReport report = nonrigid_flat_report(spec, reduced_options());
  CHECK(report.raw_flags == 8);
  CHECK(report.flags.size() >= 7);
  CHECK_FALSE(report.common_frame);
  CHECK(report.frame_margin >= 0.1);
  REQUIRE(report.flat_distance.size() == 2);
  CHECK(report.flat_distance[1] > report.flat_distance[0]);
  CHECK(report.flat_distance[1] >= 0.1);
  CHECK(report.growth_slope > 0.0);

  const nlohmann::ordered_json j = nonrigid_report_json(report);
  CHECK(j["schema"] == "nonrigid-flat/1");
  CHECK(j["common_frame"] == false);
  CHECK(j["flags"].size() == report.flags.size());
}

TEST_CASE("report fragments serialize deterministically") {
  const auto pairs = sample_an_map_pairs(5, 200, 3.0);
  const std::string once = fit_result_json(fit_qi_constants(pairs)).dump();
  const auto pairs_again = sample_an_map_pairs(5, 200, 3.0);
  const std::string twice = fit_result_json(fit_qi_constants(pairs_again)).dump();
  CHECK(once == twice);

  const nlohmann::ordered_json j = fit_result_json(fit_qi_constants(pairs));
  CHECK(j["schema"] == "qi-fit/1");
  CHECK(j["train_violations"] == 0);
  CHECK(j["frontier"].size() == 97);
}
