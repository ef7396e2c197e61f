#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "nsnh/linalg.hpp"
#include "nsnh/system.hpp"

using namespace nsnh;

TEST_CASE("unconstrained distribution basis is the identity") {
  DistributionSpec d;
  const Mat B = distribution_basis(d, Vec::Zero(3));
  CHECK((B - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pendulum distribution with f = 1 is spanned by (1,1)/sqrt2") {
  const auto sc = fx::scenario("spherical_pendulum", {{"eps", 0.0}});
  const Mat B = distribution_basis(sc.full->distribution, Vec{{1.0, 0.3}});
  REQUIRE(B.cols() == 1);
  const Vec e = Vec{{1.0, 1.0}} / std::sqrt(2.0);
  CHECK(std::abs(std::abs(B.col(0).dot(e)) - 1.0) < 1e-14);
}

TEST_CASE("rolling disk distribution at phi = 0, R = 1") {
  const auto sc = fx::scenario("rolling_disk", {{"R", 1.0}, {"x0", -0.5}});
  const Mat B = distribution_basis(sc.full->distribution, Vec{{0.1, 0.2, 0.3, 0.0}});
  REQUIRE(B.cols() == 2);
  // Span equality: projecting the expected generators onto span(B) is lossless.
  Mat expected(4, 2);
  expected << 1, 0, 0, 0, 1, 0, 0, 1;
  CHECK((B * B.transpose() * expected - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((B.transpose() * B - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("random distributions are annihilated by their rows") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 5, m = trial % n;
    const Mat A = Mat::NullaryExpr(m, n, [&] { return fx::random_vec(rng, 1)(0); });
    DistributionSpec d;
    d.m = m;
    d.mu = [A](const Vec&) { return A; };
    const Mat B = distribution_basis(d, Vec::Zero(n));
    CHECK(B.cols() == n - m);
    if (m > 0) CHECK((A * B).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("duplicated constraint rows are rank deficient") {
  DistributionSpec d;
  d.m = 2;
  d.mu = [](const Vec&) {
    Mat mu(2, 3);
    mu << 1, 2, 3, 1, 2, 3;
    return mu;
  };
  try {
    distribution_basis(d, Vec::Zero(3));
    FAIL("expected RankDeficient");
  } catch (const SimError& e) {
    CHECK(e.kind() == ErrorKind::RankDeficient);
  }
  SystemSpec sys = fx::free_particle(3);
  sys.distribution = d;
  const auto rep = validate_geometry(sys, {Vec::Zero(3)});
  CHECK_FALSE(rep.find("distribution_rank")->passed);
  CHECK(rep.find("distribution_rank")->detail.find("RankDeficient") != std::string::npos);
}

TEST_CASE("impact coannihilator rows") {
  SUBCASE("billiard: db only") {
    const auto sys = fx::unit_disk_billiard();
    const auto co = impact_coannihilator(sys.distribution, *sys.boundary, Vec{{1.0, 0.0}});
    REQUIRE(co.rows.rows() == 1);
    CHECK(co.rows(0, 0) == 2.0);
    CHECK(co.rows(0, 1) == 0.0);
    CHECK(co.rank == 1);
  }
  SUBCASE("rolling disk: db over the two rolling constraints") {
    const double R = 0.2, phi = 0.7, theta = 0.4;
    const auto sc = fx::scenario("rolling_disk");
    // Put the rim point on the unit circle.
    const double x = 0.3, Y = std::sqrt(1.0 - std::pow(x + R * std::cos(phi), 2));
    const double y = Y - R * std::sin(phi);
    const Vec q{{x, y, theta, phi}};
    const auto co = impact_coannihilator(sc.full->distribution, *sc.full->boundary, q);
    REQUIRE(co.rows.rows() == 3);
    const Vec r0{{2 * (x + R * std::cos(phi)), 2 * (y + R * std::sin(phi)), 0.0,
                  2 * R * (-x * std::sin(phi) + y * std::cos(phi))}};
    CHECK((co.rows.row(0).transpose() - r0).norm() < 1e-14);
    CHECK((co.rows.row(1).transpose() - Vec{{1, 0, -R * std::cos(phi), 0}}).norm() < 1e-14);
    CHECK((co.rows.row(2).transpose() - Vec{{0, 1, -R * std::sin(phi), 0}}).norm() < 1e-14);
    CHECK_FALSE(co.degenerate);
  }
  SUBCASE("reduced pendulum: d theta only") {
    const auto sc = fx::scenario("reduced_pendulum");
    const double theta = std::asin(1.0 / 1.5);
    const auto co = impact_coannihilator(sc.reduced->delta_sigma, *sc.reduced->boundary,
                                         Vec{{theta}});
    REQUIRE(co.rows.rows() == 1);
    CHECK(co.rows(0, 0) == doctest::Approx(1.5 * std::cos(theta)));
  }
}

TEST_CASE("validate_geometry") {
  SUBCASE("flat free particle passes") {
    const auto rep = validate_geometry(fx::free_particle(3), {Vec::Zero(3), Vec::Ones(3)});
    CHECK(rep.passed());
  }
  SUBCASE("boundary gradient with the wrong sign") {
    auto sys = fx::unit_disk_billiard();
    sys.boundary->db = [](const Vec& q) -> Vec { return -2.0 * q; };
    const auto rep = validate_geometry(sys, {Vec{{0.3, 0.4}}, Vec{{-0.5, 0.1}}});
    const auto* c = rep.find("boundary_gradient");
    REQUIRE(c);
    CHECK_FALSE(c->passed);
    CHECK(c->worst == doctest::Approx(2.0).epsilon(1e-6));
  }
  SUBCASE("paper scenarios pass") {
    for (const char* name : {"rolling_disk", "spherical_pendulum", "free_billiard"}) {
      const auto sc = fx::scenario(name);
      const Vec q = sc.full_initial->q;
      CHECK_MESSAGE(validate_geometry(*sc.full, {q}).passed(), name);
    }
  }
}

TEST_CASE("saddle solve and span residual") {
  const Mat H = Mat::Identity(2, 2);
  Mat D(1, 2);
  D << 1, 1;
  const auto s = linalg::solve_saddle(H, D, Vec{{1.0, 0.0}}, Vec{{0.0}}, 1e-12);
  CHECK(std::abs(s.x.sum()) < 1e-15);
  CHECK((H * s.x - Vec{{1.0, 0.0}} - D.transpose() * s.lambda).norm() < 1e-14);
  CHECK(linalg::span_residual(Mat(Vec{{1.0, 0.0}}), Vec{{3.0, 4.0}}) == doctest::Approx(4.0));
}
