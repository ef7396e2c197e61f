#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "nsnh/lagrangian.hpp"

using namespace nsnh;

TEST_CASE("energy examples") {
  SUBCASE("disk at rest") {
    const auto sc = fx::scenario("rolling_disk");
    const Vec q = sc.full_initial->q;
    CHECK(energy(sc.full->lagrangian, q, Vec::Zero(4), Vec{{3.0, -1.0, 2.0, 5.0}}) == 0.0);
  }
  SUBCASE("pendulum at the equator") {
    const auto sc = fx::scenario("spherical_pendulum", {{"L", 1.0}, {"theta0", 0.5}});
    const Vec q{{std::numbers::pi / 2, 0.0}}, v{{1.0, 0.0}};
    const Vec p = legendre(sc.full->lagrangian, q, v);
    CHECK(energy(sc.full->lagrangian, q, v, p) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("disk with m=1, I=2, J=3") {
    const auto sc = fx::scenario("rolling_disk", {{"I", 2.0}, {"J", 3.0}});
    const Vec one = Vec::Ones(4);
    CHECK(energy(sc.full->lagrangian, sc.full_initial->q, one, 2.0 * one) == 4.5);
  }
}

TEST_CASE("Legendre map") {
  const double m = 1.3, L = 1.5, th = 1.1;
  const auto sc = fx::scenario("spherical_pendulum", {{"m", m}, {"L", L}});
  const Vec p = legendre(sc.full->lagrangian, Vec{{th, 0.2}}, Vec{{0.7, -0.4}});
  CHECK(p(0) == doctest::Approx(m * L * L * 0.7));
  CHECK(p(1) == doctest::Approx(m * L * L * -0.4 * std::pow(std::sin(th), 2)));

  const auto disk = fx::scenario("rolling_disk", {{"m", 2.0}, {"I", 3.0}});
  const Vec pd = legendre(disk.full->lagrangian, Vec::Zero(4), Vec{{1.0, 0.0, 0.5, 0.0}});
  CHECK(pd(0) == 2.0);
  CHECK(pd(2) == 1.5);
  CHECK(legendre(disk.full->lagrangian, Vec::Zero(4), Vec::Zero(4)).norm() == 0.0);
}

TEST_CASE("energy equals dL_dv . v - L") {
  std::mt19937_64 rng(3);
  const auto sc = fx::scenario("spherical_pendulum");
  const auto& lag = sc.full->lagrangian;
  for (int i = 0; i < 100; ++i) {
    const Vec q = fx::random_vec(rng, 2, 0.1, 3.0), v = fx::random_vec(rng, 2);
    const double E = energy(lag, q, v, legendre(lag, q, v));
    CHECK(std::abs(E - (lag.dL_dv(q, v).dot(v) - lag.L(q, v))) <= 1e-12);
  }
}

TEST_CASE("finite-difference audit") {
  std::vector<std::pair<Vec, Vec>> samples;
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10; ++i) {
    samples.emplace_back(fx::random_vec(rng, 2, 0.2, 2.9), fx::random_vec(rng, 2));
  }
  SUBCASE("correct pendulum") {
    const auto sc = fx::scenario("spherical_pendulum");
    const auto rep = fd_audit(sc.full->lagrangian, samples);
    CHECK(rep.passed);
    CHECK(rep.dL_dv_error <= 1e-6);
    CHECK(rep.dL_dq_error <= 1e-6);
    CHECK(rep.d2L_dvdv_error <= 1e-6);
    CHECK(rep.d2L_dvdq_error <= 1e-6);
  }
  SUBCASE("zeroed dL_dq is caught") {
    auto sc = fx::scenario("spherical_pendulum", {{"L", 1.0}});
    sc.full->lagrangian.dL_dq = [](const Vec& q, const Vec&) -> Vec { return Vec::Zero(q.size()); };
    const std::vector<std::pair<Vec, Vec>> one = {{Vec{{std::numbers::pi / 2, 0.0}}, Vec::Zero(2)}};
    const auto rep = fd_audit(sc.full->lagrangian, one);
    CHECK_FALSE(rep.passed);
    // Gravity term m g L sin(theta) = 9.8, scaled by 1 + |supplied| = 1.
    CHECK(rep.dL_dq_error == doctest::Approx(9.8).epsilon(1e-6));
  }
  SUBCASE("free particle has an exact dL_dq") {
    const auto rep = fd_audit(fx::free_particle(3).lagrangian,
                              {{Vec::Ones(3), Vec{{1.0, 2.0, 3.0}}}});
    CHECK(rep.dL_dq_error == 0.0);
    CHECK(rep.passed);
  }
}
