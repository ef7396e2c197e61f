#include "nsnh/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nsnh/linalg.hpp"

namespace nsnh {

std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::skipped: return "skipped";
  }
  return "?";
}

bool AuditReport::passed() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const AuditCheck& c) { return c.status == CheckStatus::fail; });
}

const AuditCheck* AuditReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

constexpr std::size_t kMaxLocations = 32;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Accumulates max |value| and the indices where it exceeds the tolerance.
struct Tally {
  AuditCheck check;

  Tally(std::string name, double tol) {
    check.name = std::move(name);
    check.tolerance = tol;
  }
  void add(double value, long where) {
    if (std::isnan(value)) return;
    check.worst = std::max(check.worst, value);
    if (value > check.tolerance) {
      check.status = CheckStatus::fail;
      if (check.locations.size() < kMaxLocations) check.locations.push_back(where);
    }
  }
  AuditCheck done() && { return std::move(check); }
};

AuditCheck skipped(std::string name, double tol, std::string reason) {
  AuditCheck c;
  c.name = std::move(name);
  c.status = CheckStatus::skipped;
  c.tolerance = tol;
  c.reason = std::move(reason);
  return c;
}

// Uniform runs of same-segment samples; a run is [first, last].
std::vector<std::pair<std::size_t, std::size_t>> uniform_runs(const std::vector<double>& t,
                                                              const std::vector<int>& segment,
                                                              double h) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  if (t.empty()) return runs;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= t.size(); ++i) {
    const bool breaks = i == t.size() || segment[i] != segment[i - 1] ||
                        std::abs((t[i] - t[i - 1]) - h) > 1e-9 * h;
    if (breaks) {
      runs.emplace_back(start, i - 1);
      start = i;
    }
  }
  return runs;
}

// Fourth-order first derivative at position j of a uniform run of n ≥ 5 values.
template <class Get>
Vec stencil_derivative(const Get& f, std::size_t first, std::size_t n, std::size_t j, double h) {
  const auto F = [&](std::size_t k) { return f(first + k); };
  if (j >= 2 && j + 2 < n) {
    return (F(j - 2) - 8.0 * F(j - 1) + 8.0 * F(j + 1) - F(j + 2)) / (12.0 * h);
  }
  if (j == 0) {
    return (-25.0 * F(0) + 48.0 * F(1) - 36.0 * F(2) + 16.0 * F(3) - 3.0 * F(4)) / (12.0 * h);
  }
  if (j == 1) {
    return (-3.0 * F(0) - 10.0 * F(1) + 18.0 * F(2) - 6.0 * F(3) + F(4)) / (12.0 * h);
  }
  const std::size_t e = n - 1;
  if (j == e) {
    return (25.0 * F(e) - 48.0 * F(e - 1) + 36.0 * F(e - 2) - 16.0 * F(e - 3) + 3.0 * F(e - 4)) /
           (12.0 * h);
  }
  return (3.0 * F(e) + 10.0 * F(e - 1) - 18.0 * F(e - 2) + 6.0 * F(e - 3) - F(e - 4)) /
         (12.0 * h);
}

}  // namespace

std::vector<SampleResiduals> sample_residuals(const SystemSpec& sys, const Trajectory& traj,
                                              Execution exec) {
  const std::size_t n = traj.samples.size();
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) times[i] = traj.samples[i].t;
  // run_of[i] = (first, length) of the uniform run containing i.
  std::vector<std::pair<std::size_t, std::size_t>> run_of(n);
  for (const auto& [a, b] : uniform_runs(times, traj.segment, traj.h)) {
    for (std::size_t i = a; i <= b; ++i) run_of[i] = {a, b - a + 1};
  }

  const auto p_at = [&](std::size_t k) -> const Vec& { return traj.samples[k].p; };
  const auto compute = [&](std::size_t i) {
    const PontryaginState& s = traj.samples[i];
    SampleResiduals r;
    const Mat mu = sys.distribution.rows(s.q);
    r.constraint = mu.rows() > 0 ? inf_norm(mu * s.v) : 0.0;
    r.legendre = inf_norm(s.p - sys.lagrangian.dL_dv(s.q, s.v)) / (1.0 + inf_norm(s.p));
    const auto [first, len] = run_of[i];
    if (len < 5) {
      r.force_containment = kNaN;
      r.energy_balance = kNaN;
      return r;
    }
    const Vec pdot = stencil_derivative(p_at, first, len, i - first, traj.h);
    const Vec force = covariant_rate(sys.connection, s.q, s.v, s.p, pdot) -
                      horizontal_derivative(sys.lagrangian, sys.connection, s.q, s.v);
    const Mat basis = distribution_basis(sys.distribution, s.q, sys.tol.rank);
    r.force_containment = inf_norm(basis.transpose() * force);
    const double E = energy(sys.lagrangian, s.q, s.v, s.p);
    r.energy_balance = std::abs(force.dot(s.v)) / (1.0 + std::abs(E));
    return r;
  };

  std::vector<SampleResiduals> out(n);
  if (exec == Execution::parallel) {
    const long count = static_cast<long>(n);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = compute(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = compute(i);
  }
  return out;
}

AuditReport audit_trajectory(const SystemSpec& sys, const Trajectory& traj, const Tolerances& tol,
                             const ZenoPolicy& zeno, Execution exec) {
  AuditReport rep;
  rep.subject = sys.name;
  const std::size_t n = traj.samples.size();

  {
    Tally t("sample_times", 0.0);
    for (std::size_t i = 1; i < n; ++i) {
      t.add(traj.samples[i].t > traj.samples[i - 1].t ? 0.0 : 1.0, static_cast<long>(i));
    }
    for (std::size_t e = 0; e < traj.events.size(); ++e) {
      const double te = traj.events[e].t_impact;
      const bool inside = n > 0 && te >= traj.samples.front().t && te <= traj.samples.back().t;
      const bool ordered = e == 0 || te > traj.events[e - 1].t_impact;
      t.add(inside && ordered ? 0.0 : 1.0, static_cast<long>(e));
    }
    rep.checks.push_back(std::move(t).done());
  }

  {
    Tally t("energy_drift", tol.energy_drift);
    int seg = -1;
    double e_ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = traj.samples[i];
      const double E = energy(sys.lagrangian, s.q, s.v, s.p);
      if (traj.segment[i] != seg) {
        seg = traj.segment[i];
        e_ref = E;
      }
      t.add(std::abs(E - e_ref) / (1.0 + std::abs(e_ref)), static_cast<long>(i));
    }
    rep.checks.push_back(std::move(t).done());
  }

  const std::vector<SampleResiduals> res = sample_residuals(sys, traj, exec);
  {
    Tally c("constraint", tol.constraint);
    Tally l("legendre", tol.legendre);
    Tally f("force_containment", tol.force_containment);
    Tally b("energy_balance", tol.energy_balance);
    long stencil_points = 0;
    for (std::size_t i = 0; i < n; ++i) {
      c.add(res[i].constraint, static_cast<long>(i));
      l.add(res[i].legendre, static_cast<long>(i));
      f.add(res[i].force_containment, static_cast<long>(i));
      b.add(res[i].energy_balance, static_cast<long>(i));
      if (!std::isnan(res[i].force_containment)) ++stencil_points;
    }
    rep.checks.push_back(std::move(c).done());
    rep.checks.push_back(std::move(l).done());
    if (stencil_points == 0) {
      rep.checks.push_back(skipped("force_containment", tol.force_containment,
                                   "no uniform run of 5 samples inside one smooth segment"));
      rep.checks.push_back(skipped("energy_balance", tol.energy_balance,
                                   "no uniform run of 5 samples inside one smooth segment"));
    } else {
      rep.checks.push_back(std::move(f).done());
      rep.checks.push_back(std::move(b).done());
    }
  }

  if (traj.events.empty()) {
    for (const char* name : {"jump_containment", "energy_jump", "inwardness", "reset_separation"}) {
      rep.checks.push_back(skipped(name, 0.0, "no impacts"));
    }
  } else {
    Tally jc("jump_containment", tol.jump);
    Tally ej("energy_jump", tol.energy_jump);
    Tally in("inwardness", 0.0);
    AuditCheck rs;
    rs.name = "reset_separation";
    rs.worst = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < traj.events.size(); ++e) {
      const ImpactRecord& r = traj.events[e];
      const long where = static_cast<long>(e);
      const Mat mu = sys.distribution.rows(r.q);
      const Vec db = sys.boundary ? sys.boundary->db(r.q) : Vec::Zero(r.q.size());
      Mat span(r.q.size(), mu.rows() + 1);
      span.col(0) = db;
      if (mu.rows() > 0) span.rightCols(mu.rows()) = mu.transpose();
      const Vec dp = r.p_plus - r.p_minus;
      jc.add(linalg::span_residual(span, dp) / (1.0 + dp.norm()), where);

      const double e_rec = std::abs(r.e_plus - r.e_minus);
      const double e_states =
          std::abs(energy(sys.lagrangian, r.q, r.v_plus, r.p_plus) -
                   energy(sys.lagrangian, r.q, r.v_minus, r.p_minus));
      ej.add(std::max(e_rec, e_states), where);

      // Inward post-impact motion, on-boundary contact, admissible v⁺.
      const double b = sys.boundary ? std::abs(sys.boundary->b(r.q)) : 0.0;
      const double c = mu.rows() > 0 ? inf_norm(mu * r.v_plus) : 0.0;
      const bool ok = db.dot(r.v_plus) < 0.0 && b <= tol.boundary && c <= tol.constraint;
      in.add(ok ? 0.0 : 1.0, where);

      if (sys.boundary && b <= tol.boundary) {
        const ResetSeparation sep = reset_separation(sys, r.q, r.v_minus);
        rs.worst = std::min(rs.worst, sep.separation);
        if (!(sep.separation > 0.0) && rs.locations.size() < kMaxLocations) {
          rs.status = CheckStatus::fail;
          rs.locations.push_back(where);
        }
      }
    }
    rep.checks.push_back(std::move(jc).done());
    rep.checks.push_back(std::move(ej).done());
    rep.checks.push_back(std::move(in).done());
    rs.reason = "minimum ||R(v)-v||_g over impacts; must be > 0";
    rep.checks.push_back(std::move(rs));
  }

  {
    AuditCheck z;
    z.name = "zeno";
    z.tolerance = zeno.min_interimpact_time;
    try {
      zeno_guard(traj.events, zeno);
    } catch (const SimError& e) {
      z.status = CheckStatus::fail;
      z.reason = e.what();
    }
    z.worst = static_cast<double>(traj.events.size());
    rep.checks.push_back(std::move(z));
  }
  return rep;
}

AuditReport audit_reduced_trajectory(const ReducedSystemSpec& spec, const ReducedTrajectory& traj,
                                     const Tolerances& tol, const ZenoPolicy& zeno) {
  AuditReport rep;
  rep.subject = spec.name;
  const std::size_t n = traj.samples.size();
  const int r = spec.r, k = spec.k();

  {
    Tally t("sample_times", 0.0);
    for (std::size_t i = 1; i < n; ++i) {
      t.add(traj.samples[i].t > traj.samples[i - 1].t ? 0.0 : 1.0, static_cast<long>(i));
    }
    rep.checks.push_back(std::move(t).done());
  }
  {
    Tally drift("energy_drift", tol.energy_drift);
    Tally hc("horizontal_constraint", tol.constraint);
    Tally vc(spec.vertical == VerticalMode::paper_literal ? "vertical_consistency"
                                                          : "vertical_constraint",
             tol.constraint);
    Tally leg("legendre", tol.legendre);
    int seg = -1;
    double e_ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const ReducedState& s = traj.samples[i];
      const double e = reduced_energy(spec, s);
      if (traj.segment[i] != seg) {
        seg = traj.segment[i];
        e_ref = e;
      }
      drift.add(std::abs(e - e_ref) / (1.0 + std::abs(e_ref)), static_cast<long>(i));
      const Mat Dh = spec.delta_sigma.rows(s.sigma);
      const Mat Dv = spec.delta_gtilde.rows(s.sigma);
      hc.add(Dh.rows() > 0 ? inf_norm(Dh * s.u) : 0.0, static_cast<long>(i));
      vc.add(Dv.rows() > 0 ? inf_norm(Dv * s.xi) : 0.0, static_cast<long>(i));
      Vec mom(r + k);
      mom << s.y, s.rho;
      leg.add(inf_norm(mom - spec.momentum(s.sigma, s.u, s.xi)) / (1.0 + inf_norm(mom)),
              static_cast<long>(i));
    }
    rep.checks.push_back(std::move(drift).done());
    rep.checks.push_back(std::move(hc).done());
    rep.checks.push_back(std::move(vc).done());
    rep.checks.push_back(std::move(leg).done());
  }

  if (traj.events.empty()) {
    for (const char* name : {"jump_containment", "energy_jump", "inwardness"}) {
      rep.checks.push_back(skipped(name, 0.0, "no impacts"));
    }
  } else {
    Tally jc("jump_containment", tol.jump);
    Tally ej("energy_jump", tol.energy_jump);
    Tally in("inwardness", 0.0);
    for (std::size_t e = 0; e < traj.events.size(); ++e) {
      const ReducedImpactRecord& rec = traj.events[e];
      const long where = static_cast<long>(e);
      const Mat Dh = spec.delta_sigma.rows(rec.sigma);
      const Mat Dv = spec.vertical == VerticalMode::paper_literal
                         ? Mat(0, k)
                         : spec.delta_gtilde.rows(rec.sigma);
      const Vec db = spec.boundary->db(rec.sigma);
      Mat span_h(r, Dh.rows() + 1);
      span_h.col(0) = db;
      if (Dh.rows() > 0) span_h.rightCols(Dh.rows()) = Dh.transpose();
      const Vec dy = rec.y_plus - rec.y_minus;
      const Vec drho = rec.rho_plus - rec.rho_minus;
      const double res = std::hypot(linalg::span_residual(span_h, dy),
                                    linalg::span_residual(Dv.transpose(), drho));
      jc.add(res / (1.0 + std::hypot(dy.norm(), drho.norm())), where);
      ej.add(std::abs(rec.e_plus - rec.e_minus), where);
      const bool ok = db.dot(rec.u_plus) < 0.0 &&
                      std::abs(spec.boundary->b(rec.sigma)) <= tol.boundary;
      in.add(ok ? 0.0 : 1.0, where);
    }
    rep.checks.push_back(std::move(jc).done());
    rep.checks.push_back(std::move(ej).done());
    rep.checks.push_back(std::move(in).done());
  }

  {
    AuditCheck z;
    z.name = "zeno";
    z.tolerance = zeno.min_interimpact_time;
    std::vector<double> times;
    for (const auto& e : traj.events) times.push_back(e.t_impact);
    try {
      zeno_guard(std::span<const double>(times), zeno);
    } catch (const SimError& e) {
      z.status = CheckStatus::fail;
      z.reason = e.what();
    }
    z.worst = static_cast<double>(times.size());
    rep.checks.push_back(std::move(z));
  }
  return rep;
}

AuditReport audit_eps(const EpsSystem& eps, const ReducedTrajectory& traj, const Tolerances& tol) {
  AuditReport rep = audit_reduced_trajectory(as_reduced(eps), traj, tol);
  rep.subject = "eps";
  const std::size_t n = traj.samples.size();
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) times[i] = traj.samples[i].t;
  Tally t("eps_containment", tol.eps_containment);
  long points = 0;
  const Mat d_rows = eps.d_annihilator.transpose();
  const auto mu_at = [&](std::size_t k) -> const Vec& { return traj.samples[k].rho; };
  for (const auto& [a, b] : uniform_runs(times, traj.segment, traj.h)) {
    const std::size_t len = b - a + 1;
    if (len < 5) continue;
    for (std::size_t i = a; i <= b; ++i) {
      const ReducedState& s = traj.samples[i];
      const Vec mudot = stencil_derivative(mu_at, a, len, i - a, traj.h);
      const Vec res = mudot - ad_star(eps.algebra, s.xi, s.rho, eps.coadjoint_sign);
      t.add(linalg::span_residual(d_rows, res), static_cast<long>(i));
      ++points;
    }
  }
  if (points == 0) {
    rep.checks.push_back(skipped("eps_containment", tol.eps_containment,
                                 "no uniform run of 5 samples"));
  } else {
    rep.checks.push_back(std::move(t).done());
  }
  return rep;
}

AuditReport audit_equivalence(const Trajectory& full, const ReducedTrajectory& reduced,
                              const BundleLayout& layout, const ReducedSystemSpec& spec,
                              const Tolerances& tol) {
  const std::size_t n = std::min(full.samples.size(), reduced.samples.size());
  if (n == 0) throw SimError(ErrorKind::GridMismatch, "trajectories do not overlap");
  if (std::abs(full.h - reduced.h) > 1e-15 * full.h) {
    throw SimError(ErrorKind::GridMismatch, "full and reduced runs use different steps");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(full.samples[i].t - reduced.samples[i].t) > 1e-9 * full.h) {
      throw SimError(ErrorKind::GridMismatch,
                     "sample " + std::to_string(i) + " is at different times");
    }
  }

  AuditReport rep;
  rep.subject = "equivalence";
  {
    AuditCheck c;
    c.name = "impact_count";
    c.worst = std::abs(static_cast<double>(full.events.size()) -
                       static_cast<double>(reduced.events.size()));
    if (c.worst != 0.0) {
      c.status = CheckStatus::fail;
      c.reason = std::to_string(full.events.size()) + " full vs " +
                 std::to_string(reduced.events.size()) + " reduced impacts";
    }
    rep.checks.push_back(std::move(c));
  }
  {
    AuditCheck c;
    c.name = "reduced_state";
    c.tolerance = tol.equivalence;
    for (std::size_t i = 0; i < n; ++i) {
      const ReducedState a = reduce_state(layout, full.samples[i]);
      const ReducedState& b = reduced.samples[i];
      const double d = std::max({inf_norm(a.sigma - b.sigma), inf_norm(a.u - b.u),
                                 inf_norm(a.xi - b.xi), inf_norm(a.rho - b.rho)});
      c.worst = std::max(c.worst, d);
      if (d > c.tolerance && c.locations.empty()) {
        c.status = CheckStatus::fail;
        c.locations.push_back(static_cast<long>(i));
        c.reason = "first divergence at sample " + std::to_string(i);
      }
    }
    rep.checks.push_back(std::move(c));
  }
  {
    const bool coordinates = spec.algebra.generators.empty() && spec.algebra.abelian();
    if (!coordinates) {
      rep.checks.push_back(skipped("reconstruction", tol.equivalence,
                                   "group is not a translation group in coordinates"));
    } else {
      AuditCheck c;
      c.name = "reconstruction";
      c.tolerance = tol.equivalence;
      const Vec g0 = group_coordinates(layout, full.samples.front().q);
      const std::vector<Mat> g = reconstruct(spec, reduced, Mat(g0));
      for (std::size_t i = 0; i < n; ++i) {
        const double d = inf_norm(Vec(g[i].col(0)) - group_coordinates(layout, full.samples[i].q));
        c.worst = std::max(c.worst, d);
        if (d > c.tolerance && c.locations.empty()) {
          c.status = CheckStatus::fail;
          c.locations.push_back(static_cast<long>(i));
          c.reason = "first divergence at sample " + std::to_string(i);
        }
      }
      rep.checks.push_back(std::move(c));
    }
  }
  return rep;
}

std::vector<EnsembleMember> run_ensemble(const SystemSpec& sys,
                                         const std::vector<PontryaginState>& initial,
                                         double t_final, const IntegratorOptions& opts,
                                         Execution exec) {
  const auto one = [&](const PontryaginState& s0) {
    EnsembleMember m;
    try {
      const Trajectory tr = integrate(sys, s0, t_final, opts);
      m.q_final = tr.samples.back().q;
      m.v_final = tr.samples.back().v;
      m.impacts = static_cast<long>(tr.events.size());
      int seg = -1;
      double e_ref = 0.0;
      for (std::size_t i = 0; i < tr.samples.size(); ++i) {
        const auto& d = tr.diagnostics[i];
        if (tr.segment[i] != seg) {
          seg = tr.segment[i];
          e_ref = d.energy;
        }
        m.max_energy_drift =
            std::max(m.max_energy_drift, std::abs(d.energy - e_ref) / (1.0 + std::abs(e_ref)));
        m.max_constraint = std::max(m.max_constraint, d.constraint_residual);
      }
    } catch (const SimError& e) {
      m.error = e.what();
    }
    return m;
  };

  std::vector<EnsembleMember> out(initial.size());
  if (exec == Execution::parallel) {
    const long count = static_cast<long>(initial.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = one(initial[static_cast<std::size_t>(i)]);
  } else {
    for (std::size_t i = 0; i < initial.size(); ++i) out[i] = one(initial[i]);
  }
  return out;
}

}  // namespace nsnh
