#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "nsnh/impact.hpp"
#include "nsnh/integrator.hpp"

using namespace nsnh;

TEST_CASE("locate_crossing") {
  const auto sys = fx::unit_disk_billiard();
  SUBCASE("straight line hits the circle at t = 1") {
    DenseSegment seg{0.5, 1.5, Vec{{0.5, 0.0}}, Vec{{1.5, 0.0}}, Vec{{1.0, 0.0}}, Vec{{1.0, 0.0}}};
    const auto t = locate_crossing(seg, *sys.boundary);
    REQUIRE(t);
    CHECK(*t == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("interior segment") {
    // max b = -0.3 along the segment.
    const double r = std::sqrt(0.7);
    DenseSegment seg{0.0, 1.0, Vec{{-r, 0.0}}, Vec{{r, 0.0}}, Vec{{2 * r, 0.0}}, Vec{{2 * r, 0.0}}};
    CHECK_FALSE(locate_crossing(seg, *sys.boundary));
  }
  SUBCASE("pendulum crossing refines with the tolerance") {
    const auto sc = fx::scenario("spherical_pendulum");
    IntegratorOptions opts;
    opts.h = 0.01;
    const auto traj = integrate(*sc.full, *sc.full_initial, 0.3, opts);
    REQUIRE(!traj.events.empty());
    CHECK(std::abs(sc.full->boundary->b(traj.events[0].q)) <= 1e-9);
    // Build the segment that straddles the wall and tighten the locator.
    auto sys = *sc.full;
    sys.boundary.reset();
    auto s = *sc.full_initial;
    PontryaginState prev = s;
    while (sc.full->boundary->b(s.q) < 0.0) {
      prev = s;
      s = step(sys, s, opts);
    }
    DenseSegment seg{prev.t, s.t, prev.q, s.q, prev.v, s.v};
    double last = 1.0;
    for (double tol : {1e-6, 1e-9, 1e-12}) {
      const auto t = locate_crossing(seg, *sc.full->boundary, tol);
      REQUIRE(t);
      const double b = std::abs(sc.full->boundary->b(seg.position(*t)));
      CHECK(b <= std::max(tol, 1e-15));
      CHECK(b <= last);
      last = b;
    }
  }
}

TEST_CASE("billiard impact map") {
  const auto sys = fx::unit_disk_billiard();
  const auto rec = impact_map(sys, Vec{{1.0, 0.0}}, Vec{{1.0, 0.5}});
  CHECK(rec.v_plus(0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(rec.v_plus(1) == doctest::Approx(0.5).epsilon(1e-12));
  // p+ - p- = lambda0 db with db = (2, 0).
  CHECK(rec.lambda0 == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(rec.lambda.size() == 0);
  CHECK(std::abs(rec.e_plus - rec.e_minus) <= 1e-14);

  SUBCASE("reflection is an involution") {
    const auto back = impact_map(sys, Vec{{1.0, 0.0}}, -rec.v_plus);
    CHECK((-back.v_plus - Vec{{1.0, 0.5}}).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("random boundary points match specular reflection") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(0.0, 2 * std::numbers::pi);
    for (int i = 0; i < 50; ++i) {
      const double a = U(rng);
      const Vec q{{std::cos(a), std::sin(a)}};
      Vec v = fx::random_vec(rng, 2);
      if (v.dot(q) <= 0.05) v += (0.05 - v.dot(q) + 0.1) * q;
      const Vec spec = v - 2.0 * v.dot(q) * q;
      CHECK((impact_map(sys, q, v).v_plus - spec).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
  SUBCASE("preconditions") {
    try {
      impact_map(sys, Vec{{0.5, 0.0}}, Vec{{1.0, 0.0}});
      FAIL("expected NotOnBoundary");
    } catch (const SimError& e) {
      CHECK(e.kind() == ErrorKind::NotOnBoundary);
    }
    CHECK_THROWS_AS(impact_map(sys, Vec{{1.0, 0.0}}, Vec{{-1.0, 0.0}}), SimError);
  }
}

TEST_CASE("rolling disk impact multipliers") {
  const double R = 0.2, phi = 0.9, x = 0.35;
  const auto sc = fx::scenario("rolling_disk");
  const double y = std::sqrt(1.0 - std::pow(x + R * std::cos(phi), 2)) - R * std::sin(phi);
  const Vec q{{x, y, 0.3, phi}};
  const double wt = 3.0, wp = 0.5;
  const Vec v{{R * wt * std::cos(phi), R * wt * std::sin(phi), wt, wp}};
  REQUIRE(sc.full->boundary->db(q).dot(v) > 0.0);
  const auto rec = impact_map(*sc.full, q, v);
  REQUIRE(rec.lambda.size() == 2);
  const Vec dp = rec.p_plus - rec.p_minus;
  const Vec db = sc.full->boundary->db(q);
  // db carries a factor 2 relative to the hand-written row.
  CHECK(dp(3) == doctest::Approx(rec.lambda0 * db(3)).epsilon(1e-10));
  CHECK(dp(3) == doctest::Approx(2.0 * rec.lambda0 * R * (-x * std::sin(phi) + y * std::cos(phi)))
                     .epsilon(1e-10));
  const Mat mu = sc.full->distribution.rows(q);
  CHECK((dp - rec.lambda0 * db - mu.transpose() * rec.lambda).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((mu * rec.v_plus).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(rec.e_plus - rec.e_minus) <= 1e-12);
  CHECK(db.dot(rec.v_plus) < 0.0);
}

TEST_CASE("zeno_guard") {
  ZenoPolicy policy;
  std::vector<double> periodic;
  for (int i = 0; i < 100; ++i) periodic.push_back(1.0 + 2.0 * i);
  CHECK_NOTHROW(zeno_guard(std::span<const double>(periodic), policy));

  std::vector<double> dense;
  for (int i = 0; i < 5; ++i) dense.push_back(1.0 + 1e-9 * i);
  try {
    zeno_guard(std::span<const double>(dense), policy);
    FAIL("expected ZenoSuspected");
  } catch (const SimError& e) {
    CHECK(e.kind() == ErrorKind::ZenoSuspected);
  }
  CHECK_NOTHROW(zeno_guard(std::vector<ImpactRecord>{}, policy));
  policy.max_impacts = 10;
  CHECK_THROWS_AS(zeno_guard(std::span<const double>(periodic), policy), SimError);
}

TEST_CASE("reset separation") {
  const auto sys = fx::unit_disk_billiard();
  CHECK(reset_separation(sys, Vec{{1.0, 0.0}}, Vec{{0.0, 0.7}}).separation == 0.0);
  const auto r = reset_separation(sys, Vec{{1.0, 0.0}}, Vec{{1.0, 0.5}});
  CHECK(r.separation == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(r.normal_norm == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.kinetic_metric);

  std::mt19937_64 rng(9);
  const auto sc = fx::scenario("spherical_pendulum");
  const double th = std::asin(1.0 / 1.5);
  for (int i = 0; i < 100; ++i) {
    const Vec q{{i % 2 ? th : std::numbers::pi - th, fx::random_vec(rng, 1, -3, 3)(0)}};
    const Vec v = fx::random_vec(rng, 2, -3, 3);
    const auto s = reset_separation(*sc.full, q, v);
    CHECK(std::abs(s.separation - 2.0 * s.normal_norm) <= 1e-12 * (1.0 + s.separation));
  }
}
