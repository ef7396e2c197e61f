#pragma once

#include <functional>
#include <vector>

#include "nsnh/impact.hpp"
#include "nsnh/system.hpp"

namespace nsnh {

enum class Stabilization { none, post_step_projection };

struct IntegratorOptions {
  double h = 1e-3;
  // Only one scheme exists: classical RK4 with a KKT solve per stage.
  enum class Method { kkt_rk4 } method = Method::kkt_rk4;
  Stabilization stabilization = Stabilization::post_step_projection;
  double legendre_tol = default_tolerances().legendre;
  double constraint_tol = default_tolerances().constraint;
  ZenoPolicy zeno;
  ImpactOptions impact;
};

struct SampleDiagnostics {
  double energy = 0.0;
  double constraint_residual = 0.0;  // |mu(q) v|_inf
  double legendre_residual = 0.0;    // |p − dL_dv|_inf / (1 + |p|_inf)
};

struct Trajectory {
  std::vector<PontryaginState> samples;
  std::vector<Vec> multipliers;
  std::vector<SampleDiagnostics> diagnostics;
  std::vector<int> segment;  // number of impacts before each sample
  std::vector<ImpactRecord> events;
  std::vector<double> grazes;
  double h = 0.0;
};

struct ConstrainedRate {
  Vec vdot;
  Vec lambda;
};

/// Index-reduced Lagrange–d'Alembert right-hand side: solves
///   M vdot − muᵀλ = dL_dq − d2L_dvdq v,   mu vdot = −(Dmu v) v.
ConstrainedRate constrained_rhs(const SystemSpec& sys, const Vec& q, const Vec& v);

/// One RK4 step of length dt (dt may be shorter than opts.h at impacts and at
/// the horizon). p is re-synchronised through the Legendre map.
PontryaginState step(const SystemSpec& sys, const PontryaginState& s, double dt,
                     const IntegratorOptions& opts);
inline PontryaginState step(const SystemSpec& sys, const PontryaginState& s,
                            const IntegratorOptions& opts) {
  return step(sys, s, opts.h, opts);
}

/// M-metric projection of v onto ker mu(q).
Vec project_velocity(const SystemSpec& sys, const Vec& q, const Vec& v);

using ImpactObserver = std::function<void(const ImpactRecord&)>;

Trajectory integrate(const SystemSpec& sys, const PontryaginState& s0, double t_final,
                     const IntegratorOptions& opts, const ImpactObserver& on_impact = {});

/// Diagnostics of one sample, as stored in Trajectory::diagnostics.
SampleDiagnostics sample_diagnostics(const SystemSpec& sys, const PontryaginState& s);

}  // namespace nsnh
