#pragma once

#include <string>
#include <vector>

#include "nsnh/integrator.hpp"
#include "nsnh/reduction.hpp"

namespace nsnh {

enum class CheckStatus { pass, fail, skipped };
std::string_view to_string(CheckStatus s);

struct AuditCheck {
  std::string name;
  CheckStatus status = CheckStatus::pass;
  double worst = 0.0;
  double tolerance = 0.0;
  std::vector<long> locations;  // sample or event indices of violations (first 32)
  std::string reason;           // why skipped / what failed
};

struct AuditReport {
  std::string subject;
  std::vector<AuditCheck> checks;

  bool passed() const;
  const AuditCheck* find(const std::string& name) const;
};

enum class Execution { serial, parallel };

/// Per-sample residuals, computed independently for every sample. The
/// parallel and serial paths produce bitwise-identical results.
struct SampleResiduals {
  double constraint = 0.0;         // |mu(q) v|_inf
  double legendre = 0.0;           // |p − dL_dv|_inf / (1 + |p|_inf)
  double force_containment = 0.0;  // max_w |(∇p/dt − δL/δq)·w|, w ∈ Δ_Q basis; NaN if no stencil
  double energy_balance = 0.0;     // |(∇p/dt − δL/δq)·v| / (1 + |E|); NaN if no stencil
};

std::vector<SampleResiduals> sample_residuals(const SystemSpec& sys, const Trajectory& traj,
                                              Execution exec = Execution::parallel);

/// Post-hoc audit of a full trajectory: energy drift, constraint, Legendre,
/// force containment, energy balance, jump containment, energy jump,
/// inwardness and Zeno checks.
AuditReport audit_trajectory(const SystemSpec& sys, const Trajectory& traj,
                             const Tolerances& tol, const ZenoPolicy& zeno = {},
                             Execution exec = Execution::parallel);

AuditReport audit_reduced_trajectory(const ReducedSystemSpec& spec, const ReducedTrajectory& traj,
                                     const Tolerances& tol, const ZenoPolicy& zeno = {});

/// Reduced-trajectory audit plus the Euler–Poincaré–Suslov containment check
/// (μ̇ − ad*_ξ μ ∈ d°, with μ̇ from a five-point stencil).
AuditReport audit_eps(const EpsSystem& eps, const ReducedTrajectory& traj, const Tolerances& tol);

/// Compares reduce_state of the full samples with the reduced samples on the
/// shared grid and the reconstructed group coordinates with the full ones.
/// Throws GridMismatch when the grids do not overlap.
AuditReport audit_equivalence(const Trajectory& full, const ReducedTrajectory& reduced,
                              const BundleLayout& layout, const ReducedSystemSpec& spec,
                              const Tolerances& tol);

struct EnsembleMember {
  Vec q_final, v_final;
  long impacts = 0;
  double max_energy_drift = 0.0;
  double max_constraint = 0.0;
  std::string error;  // empty on success
};

/// Independent runs from several initial states (one trajectory per thread).
std::vector<EnsembleMember> run_ensemble(const SystemSpec& sys,
                                         const std::vector<PontryaginState>& initial,
                                         double t_final, const IntegratorOptions& opts,
                                         Execution exec = Execution::parallel);

}  // namespace nsnh
