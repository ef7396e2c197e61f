#include <doctest.h>

#include <cmath>
#include <cstring>

#include "fixtures.hpp"
#include "nsnh/audit.hpp"

using namespace nsnh;

namespace {

struct Run {
  Scenario sc;
  Trajectory traj;
};

Run run_full(const std::string& name, double t_final, Params p = {}) {
  Run r{build(name, p), {}};
  IntegratorOptions opts;
  r.traj = integrate(*r.sc.full, *r.sc.full_initial, t_final, opts);
  return r;
}

const AuditCheck& check(const AuditReport& rep, const std::string& name) {
  const auto* c = rep.find(name);
  REQUIRE_MESSAGE(c, name);
  return *c;
}

bool same_bits(double a, double b) {
  return std::memcmp(&a, &b, sizeof a) == 0;
}

}  // namespace

TEST_CASE("clean runs pass the audit") {
  for (const char* name : {"free_billiard", "rolling_disk", "spherical_pendulum"}) {
    const auto r = run_full(name, 3.0);
    const auto rep = audit_trajectory(*r.sc.full, r.traj, default_tolerances());
    for (const auto& c : rep.checks) {
      CHECK_MESSAGE(c.status != CheckStatus::fail, name << ": " << c.name << " " << c.reason);
    }
  }
}

TEST_CASE("event checks are skipped without impacts") {
  const auto r = run_full("free_billiard", 0.5);
  REQUIRE(r.traj.events.empty());
  const auto rep = audit_trajectory(*r.sc.full, r.traj, default_tolerances());
  CHECK(check(rep, "jump_containment").status == CheckStatus::skipped);
  CHECK(check(rep, "energy_jump").status == CheckStatus::skipped);
  CHECK(rep.passed());
}

TEST_CASE("injected faults are detected") {
  const auto tol = default_tolerances();
  auto r = run_full("rolling_disk", 3.0);
  REQUIRE(!r.traj.events.empty());
  const auto& sys = *r.sc.full;

  SUBCASE("constraint violation") {
    r.traj.samples[100].v(0) += 1e-4;
    r.traj.samples[100].p = sys.lagrangian.dL_dv(r.traj.samples[100].q, r.traj.samples[100].v);
    const auto rep = audit_trajectory(sys, r.traj, tol);
    const auto& c = check(rep, "constraint");
    CHECK(c.status == CheckStatus::fail);
    REQUIRE(!c.locations.empty());
    CHECK(c.locations.front() == 100);
  }
  SUBCASE("Legendre mismatch") {
    r.traj.samples[7].p(2) += 1e-3;
    const auto rep = audit_trajectory(sys, r.traj, tol);
    const auto& c = check(rep, "legendre");
    CHECK(c.status == CheckStatus::fail);
    CHECK(c.locations.front() == 7);
  }
  SUBCASE("energy drift") {
    // Scaling v keeps mu v = 0 but changes the kinetic energy.
    for (std::size_t i = 1; i < r.traj.samples.size(); ++i) {
      auto& s = r.traj.samples[i];
      if (r.traj.segment[i] != 0) break;
      s.v *= 1.0 + 1e-4 * static_cast<double>(i) / 100.0;
      s.p = sys.lagrangian.dL_dv(s.q, s.v);
    }
    const auto rep = audit_trajectory(sys, r.traj, tol);
    CHECK(check(rep, "energy_drift").status == CheckStatus::fail);
    CHECK(check(rep, "constraint").status == CheckStatus::pass);
  }
  SUBCASE("jump outside the coannihilator") {
    r.traj.events[0].p_plus(2) += 1e-3;
    const auto rep = audit_trajectory(sys, r.traj, tol);
    const auto& c = check(rep, "jump_containment");
    CHECK(c.status == CheckStatus::fail);
    CHECK(c.locations.front() == 0);
  }
  SUBCASE("energy jump") {
    r.traj.events[0].e_plus += 1e-6;
    CHECK(check(audit_trajectory(sys, r.traj, tol), "energy_jump").status == CheckStatus::fail);
  }
  SUBCASE("outward post-impact velocity") {
    r.traj.events[0].v_plus = r.traj.events[0].v_minus;
    CHECK(check(audit_trajectory(sys, r.traj, tol), "inwardness").status == CheckStatus::fail);
  }
  SUBCASE("force outside the annihilator") {
    // A smooth spurious acceleration on x changes the force along Δ.
    for (auto& s : r.traj.samples) {
      if (r.traj.segment[&s - r.traj.samples.data()] == 0) s.p(2) += 0.05 * s.t * s.t;
    }
    for (std::size_t i = 0; i < r.traj.samples.size(); ++i) {
      r.traj.diagnostics[i] = sample_diagnostics(sys, r.traj.samples[i]);
    }
    const auto rep = audit_trajectory(sys, r.traj, tol);
    CHECK(check(rep, "force_containment").status == CheckStatus::fail);
  }
}

TEST_CASE("serial and parallel residuals agree bitwise") {
  const auto r = run_full("spherical_pendulum", 2.0);
  const auto a = sample_residuals(*r.sc.full, r.traj, Execution::serial);
  const auto b = sample_residuals(*r.sc.full, r.traj, Execution::parallel);
  REQUIRE(a.size() == b.size());
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    same = same && same_bits(a[i].constraint, b[i].constraint) &&
           same_bits(a[i].legendre, b[i].legendre) &&
           same_bits(a[i].force_containment, b[i].force_containment) &&
           same_bits(a[i].energy_balance, b[i].energy_balance);
  }
  CHECK(same);
}

TEST_CASE("ensemble serial and parallel agree bitwise") {
  const auto sc = build("free_billiard", {});
  std::vector<PontryaginState> init;
  std::mt19937_64 rng(17);
  for (int i = 0; i < 12; ++i) {
    PontryaginState s{0.0, fx::random_vec(rng, 2, -0.5, 0.5), fx::random_vec(rng, 2), {}};
    s.p = s.v;
    init.push_back(s);
  }
  IntegratorOptions opts;
  opts.h = 1e-2;
  const auto a = run_ensemble(*sc.full, init, 5.0, opts, Execution::serial);
  const auto b = run_ensemble(*sc.full, init, 5.0, opts, Execution::parallel);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].error.empty());
    CHECK(a[i].impacts == b[i].impacts);
    CHECK(std::memcmp(a[i].q_final.data(), b[i].q_final.data(), 2 * sizeof(double)) == 0);
    CHECK(std::memcmp(a[i].v_final.data(), b[i].v_final.data(), 2 * sizeof(double)) == 0);
  }
}

TEST_CASE("equivalence audit") {
  const auto sc = build("spherical_pendulum", {{"reduction", std::string("adapted")}});
  IntegratorOptions opts;
  opts.h = 1e-3;
  const auto full = integrate(*sc.full, *sc.full_initial, 0.5, opts);
  auto red = integrate_reduced(*sc.reduced, *sc.reduced_initial, 0.5, opts);
  const auto tol = default_tolerances();

  CHECK(audit_equivalence(full, red, *sc.layout, *sc.reduced, tol).passed());

  SUBCASE("first divergence index") {
    for (std::size_t i = 250; i < red.samples.size(); ++i) red.samples[i].u(0) += 1e-3;
    const auto rep = audit_equivalence(full, red, *sc.layout, *sc.reduced, tol);
    const auto& c = check(rep, "reduced_state");
    CHECK(c.status == CheckStatus::fail);
    REQUIRE(!c.locations.empty());
    CHECK(c.locations.front() == 250);
  }
  SUBCASE("different step sizes") {
    IntegratorOptions coarse = opts;
    coarse.h = 2e-3;
    const auto red2 = integrate_reduced(*sc.reduced, *sc.reduced_initial, 0.5, coarse);
    try {
      audit_equivalence(full, red2, *sc.layout, *sc.reduced, tol);
      FAIL("expected GridMismatch");
    } catch (const SimError& e) {
      CHECK(e.kind() == ErrorKind::GridMismatch);
    }
  }
}

TEST_CASE("EPS audit on the Suslov body") {
  const auto sc = build("rigid_body_suslov", {});
  const auto red = as_reduced(*sc.eps);
  ReducedState s0;
  s0.sigma = s0.u = s0.y = Vec(0);
  s0.xi = *sc.eps_initial;
  s0.rho = sc.eps->dell_dxi(s0.xi);
  IntegratorOptions opts;
  auto traj = integrate_reduced(red, s0, 2.0, opts);
  const auto tol = default_tolerances();
  CHECK(audit_eps(*sc.eps, traj, tol).passed());
  // A drift of μ along d breaks the containment.
  for (auto& s : traj.samples) s.rho(0) += 0.01 * s.t;
  CHECK(check(audit_eps(*sc.eps, traj, tol), "eps_containment").status == CheckStatus::fail);
}
