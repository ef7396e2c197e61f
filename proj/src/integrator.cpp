#include "nsnh/integrator.hpp"

#include <cmath>

#include "nsnh/hybrid.hpp"
#include "nsnh/linalg.hpp"

namespace nsnh {

ConstrainedRate constrained_rhs(const SystemSpec& sys, const Vec& q, const Vec& v) {
  const LagrangianSpec& lag = sys.lagrangian;
  const Mat M = lag.mass(q, v);
  Vec force = horizontal_derivative(lag, sys.connection, q, v) - lag.mixed(q, v) * v;
  if (!sys.connection.flat()) {
    // ∇*p/dt adds back p_k Γ^k_ji v^j; only the torsion part survives.
    const Vec p = lag.dL_dv(q, v);
    const Tensor3 gamma = sys.connection.gamma(q);
    for (Eigen::Index k = 0; k < q.size(); ++k) force += p(k) * (gamma[k].transpose() * v);
  }
  const Mat mu = sys.distribution.rows(q);
  const Vec g = -sys.distribution.quadratic_term(q, v);
  auto sol = linalg::solve_saddle(M, mu, force, g, sys.tol.kkt_residual);
  return {std::move(sol.x), std::move(sol.lambda)};
}

Vec project_velocity(const SystemSpec& sys, const Vec& q, const Vec& v) {
  const Mat mu = sys.distribution.rows(q);
  if (mu.rows() == 0) return v;
  const Mat M = sys.lagrangian.mass(q, v);
  return linalg::solve_saddle(M, mu, M * v, Vec::Zero(mu.rows()), sys.tol.kkt_residual).x;
}

PontryaginState step(const SystemSpec& sys, const PontryaginState& s, double dt,
                     const IntegratorOptions& opts) {
  PontryaginState out;
  out.t = s.t + dt;
  if (dt == 0.0) {
    out.q = s.q;
    out.v = s.v;
  } else {
    const auto acc = [&](const Vec& q, const Vec& v) { return constrained_rhs(sys, q, v).vdot; };
    const Vec k1q = s.v;
    const Vec k1v = acc(s.q, s.v);
    const Vec k2q = s.v + 0.5 * dt * k1v;
    const Vec k2v = acc(s.q + 0.5 * dt * k1q, k2q);
    const Vec k3q = s.v + 0.5 * dt * k2v;
    const Vec k3v = acc(s.q + 0.5 * dt * k2q, k3q);
    const Vec k4q = s.v + dt * k3v;
    const Vec k4v = acc(s.q + dt * k3q, k4q);
    out.q = s.q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    out.v = s.v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }

  if (opts.stabilization == Stabilization::post_step_projection && sys.distribution.m > 0) {
    out.v = project_velocity(sys, out.q, out.v);
    const double drift = inf_norm(sys.distribution.rows(out.q) * out.v);
    if (drift > opts.constraint_tol) {
      throw SimError(ErrorKind::ConstraintDriftExceeded,
                     "constraint residual " + std::to_string(drift) + " after projection at t = " +
                         std::to_string(out.t));
    }
  }
  out.p = legendre(sys.lagrangian, out.q, out.v);
  return out;
}

SampleDiagnostics sample_diagnostics(const SystemSpec& sys, const PontryaginState& s) {
  SampleDiagnostics d;
  d.energy = energy(sys.lagrangian, s.q, s.v, s.p);
  const Mat mu = sys.distribution.rows(s.q);
  d.constraint_residual = mu.rows() > 0 ? inf_norm(mu * s.v) : 0.0;
  d.legendre_residual =
      inf_norm(s.p - sys.lagrangian.dL_dv(s.q, s.v)) / (1.0 + inf_norm(s.p));
  return d;
}

namespace {

struct FullModel {
  using State = PontryaginState;
  using Event = ImpactRecord;

  const SystemSpec& sys;
  const IntegratorOptions& opts;
  const ImpactObserver& observer;

  double time(const State& s) const { return s.t; }
  Vec position(const State& s) const { return s.q; }
  Vec rate(const State& s) const { return s.v; }
  State advance(const State& s, double dt) const { return step(sys, s, dt, opts); }
  const BoundarySpec* boundary() const { return sys.boundary ? &*sys.boundary : nullptr; }
  void admit(const State& s) const {
    if (sys.guard) sys.guard(s.q);
  }
  std::pair<State, Event> resolve(const State& at) const {
    ImpactRecord rec = impact_map(sys, at.q, at.v, at.t, opts.impact);
    if (observer) observer(rec);
    State post{at.t, at.q, rec.v_plus, rec.p_plus};
    return {post, std::move(rec)};
  }
};

}  // namespace

Trajectory integrate(const SystemSpec& sys, const PontryaginState& s0, double t_final,
                     const IntegratorOptions& opts, const ImpactObserver& on_impact) {
  if (!(opts.h > 0.0)) throw SimError(ErrorKind::InvalidParams, "h must be positive");
  if (!(t_final > s0.t)) throw SimError(ErrorKind::InvalidParams, "t_final must exceed t0");
  if (s0.q.size() != sys.dim() || s0.v.size() != sys.dim()) {
    throw SimError(ErrorKind::InvalidState, "initial state has the wrong dimension");
  }
  if (sys.boundary) {
    const double b0 = sys.boundary->b(s0.q);
    const bool inside = b0 < 0.0;
    const bool leaving_wall =
        std::abs(b0) <= sys.tol.boundary && sys.boundary->db(s0.q).dot(s0.v) < 0.0;
    if (!inside && !leaving_wall) {
      throw SimError(ErrorKind::InvalidState,
                     "initial configuration is not in the admissible region (b = " +
                         std::to_string(b0) + ")");
    }
  }
  const Mat mu0 = sys.distribution.rows(s0.q);
  if (mu0.rows() > 0 && inf_norm(mu0 * s0.v) > opts.constraint_tol) {
    throw SimError(ErrorKind::InvalidState, "initial velocity violates the constraints");
  }

  PontryaginState start = s0;
  start.p = legendre(sys.lagrangian, s0.q, s0.v);

  const FullModel model{sys, opts, on_impact};
  auto run = detail::run_hybrid(model, start, t_final, opts.h, opts.zeno, sys.tol.boundary);

  Trajectory traj;
  traj.h = opts.h;
  traj.samples = std::move(run.samples);
  traj.segment = std::move(run.segment);
  traj.events = std::move(run.events);
  traj.grazes = std::move(run.grazes);
  traj.multipliers.reserve(traj.samples.size());
  traj.diagnostics.reserve(traj.samples.size());
  for (const auto& s : traj.samples) {
    traj.multipliers.push_back(constrained_rhs(sys, s.q, s.v).lambda);
    traj.diagnostics.push_back(sample_diagnostics(sys, s));
  }
  return traj;
}

}  // namespace nsnh
