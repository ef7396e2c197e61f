#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "nsnh/integrator.hpp"

using namespace nsnh;

TEST_CASE("constrained_rhs") {
  SUBCASE("free particle") {
    const auto r = constrained_rhs(fx::free_particle(3), Vec::Ones(3), Vec{{1.0, -2.0, 0.5}});
    CHECK(r.vdot.norm() == 0.0);
    CHECK(r.lambda.size() == 0);
  }
  SUBCASE("rolling disk: constant rates are a solution") {
    const auto sc = fx::scenario("rolling_disk");
    const double R = 0.2, wt = 1.3, wp = -0.6, phi = 0.4;
    const Vec q{{0.1, 0.2, 0.0, phi}};
    const Vec v{{R * wt * std::cos(phi), R * wt * std::sin(phi), wt, wp}};
    const auto r = constrained_rhs(*sc.full, q, v);
    // d/dt of the family: x'' = -R wt wp sin(phi), y'' = R wt wp cos(phi), rates fixed.
    const Vec expected{{-R * wt * wp * std::sin(phi), R * wt * wp * std::cos(phi), 0.0, 0.0}};
    CHECK((r.vdot - expected).cwiseAbs().maxCoeff() < 1e-13);
  }
  SUBCASE("pendulum with f = 1 satisfies the differentiated constraint") {
    const auto sc = fx::scenario("spherical_pendulum", {{"eps", 0.0}});
    const auto& dist = sc.full->distribution;
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
      const Vec q = fx::random_vec(rng, 2, 0.3, 2.8);
      const double vt = fx::random_vec(rng, 1)(0);
      const Vec v{{vt, vt}};
      const auto r = constrained_rhs(*sc.full, q, v);
      const Vec res = dist.rows(q) * r.vdot + dist.quadratic_term(q, v);
      CHECK(res.cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("step") {
  IntegratorOptions opts;
  SUBCASE("free particle moves by h v") {
    const auto sys = fx::free_particle(2);
    PontryaginState s{0.0, Vec{{0.1, 0.2}}, Vec{{1.0, -0.5}}, Vec{{1.0, -0.5}}};
    const auto s1 = step(sys, s, opts);
    CHECK((s1.q - (s.q + opts.h * s.v)).norm() < 1e-16);
    CHECK(s1.t == opts.h);
  }
  SUBCASE("disk constraint after 1000 steps") {
    auto sc = fx::scenario("rolling_disk", {{"vtheta0", 1.0}, {"vphi0", 1.0}});
    sc.full->boundary.reset();
    auto s = *sc.full_initial;
    for (int i = 0; i < 1000; ++i) s = step(*sc.full, s, opts);
    CHECK((sc.full->distribution.rows(s.q) * s.v).cwiseAbs().maxCoeff() <= 1e-8);
    // Analytic constant-rate solution.
    CHECK(std::abs(s.q(2) - 1.0) < 1e-10);
    CHECK(std::abs(s.q(3) - 1.0) < 1e-10);
    CHECK(std::abs(s.q(0) - 0.2 * std::sin(1.0)) < 1e-10);
    CHECK(std::abs(s.q(1) - 0.2 * (1.0 - std::cos(1.0))) < 1e-10);
  }
  SUBCASE("pendulum energy over unit time") {
    auto sc = fx::scenario("spherical_pendulum");
    sc.full->boundary.reset();
    auto s = *sc.full_initial;
    const double E0 = sample_diagnostics(*sc.full, s).energy;
    for (int i = 0; i < 1000; ++i) s = step(*sc.full, s, opts);
    const double E1 = sample_diagnostics(*sc.full, s).energy;
    CHECK(std::abs(E1 - E0) / (1.0 + std::abs(E0)) <= 1e-8);
  }
}

TEST_CASE("integrate") {
  IntegratorOptions opts;
  SUBCASE("billiard: first event at t = 1") {
    const auto sys = fx::unit_disk_billiard();
    PontryaginState s0{0.0, Vec::Zero(2), Vec{{1.0, 0.0}}, Vec{{1.0, 0.0}}};
    const auto traj = integrate(sys, s0, 1.5, opts);
    REQUIRE(traj.events.size() == 1);
    CHECK(traj.events[0].t_impact == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(traj.events[0].v_plus(0) == doctest::Approx(-1.0));
    // Samples stay on the grid.
    CHECK(traj.samples.back().t == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(traj.samples.size() == 1501);
  }
  SUBCASE("billiard: five impacts are specular") {
    const auto sys = fx::unit_disk_billiard();
    PontryaginState s0{0.0, Vec{{0.1, -0.2}}, Vec{{0.8, 0.6}}, Vec{{0.8, 0.6}}};
    int seen = 0;
    const auto traj = integrate(sys, s0, 20.0, opts, [&](const ImpactRecord&) { ++seen; });
    REQUIRE(traj.events.size() >= 5);
    CHECK(seen == static_cast<int>(traj.events.size()));
    for (const auto& e : traj.events) {
      const Vec n = e.q.normalized();
      const Vec spec = e.v_minus - 2.0 * e.v_minus.dot(n) * n;
      CHECK((e.v_plus - spec).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
  SUBCASE("pendulum that cannot reach the wall stays inside") {
    const auto sc = fx::scenario("spherical_pendulum", {{"L", 0.9}});
    const auto traj = integrate(*sc.full, *sc.full_initial, 5.0, opts);
    CHECK(traj.events.empty());
    double worst = -1.0;
    for (const auto& s : traj.samples) worst = std::max(worst, sc.full->boundary->b(s.q));
    CHECK(worst <= 1e-9);
  }
  SUBCASE("preconditions") {
    const auto sys = fx::unit_disk_billiard();
    PontryaginState out{0.0, Vec{{2.0, 0.0}}, Vec::Zero(2), Vec::Zero(2)};
    CHECK_THROWS_AS(integrate(sys, out, 1.0, opts), SimError);
    IntegratorOptions bad;
    bad.h = -1.0;
    PontryaginState in{0.0, Vec::Zero(2), Vec::Zero(2), Vec::Zero(2)};
    CHECK_THROWS_AS(integrate(sys, in, 1.0, bad), SimError);
  }
}
