#pragma once

#include <optional>
#include <span>
#include <vector>

#include "nsnh/system.hpp"

namespace nsnh {

/// One resolved elastic collision.
struct ImpactRecord {
  double t_impact = 0.0;
  Vec q;
  Vec v_minus, v_plus;
  Vec p_minus, p_plus;
  double lambda0 = 0.0;  // multiplier on db(q)
  Vec lambda;            // multipliers on the rows of mu(q)
  double e_minus = 0.0, e_plus = 0.0;
};

struct ZenoPolicy {
  double min_interimpact_time = 1e-6;
  long max_impacts = 10000;
};

/// Cubic Hermite interpolant of q on one step, built from endpoint velocities.
struct DenseSegment {
  double t0 = 0.0, t1 = 0.0;
  Vec q0, q1, v0, v1;

  Vec position(double t) const;
  Vec velocity(double t) const;
};

/// First time in (t0, t1] where b(q(t)) reaches zero from below, or nullopt.
/// Grazing approaches without a sign change return nullopt (logged).
std::optional<double> locate_crossing(const DenseSegment& seg, const BoundarySpec& bnd,
                                      double boundary_tol = default_tolerances().boundary);

struct ImpactOptions {
  int max_newton_iters = 50;
  int max_halvings = 20;
  int max_attempts = 4;
  bool check_multiplicity = true;
};

/// Generic elastic jump: find w⁺ with
///   p(w⁺) − p(w⁻) = λ₀ n + Dᵀ λ,   E(w⁺) = E(w⁻),   D w⁺ = 0,
/// rejecting the trivial root w⁺ = w⁻ and non-inward roots (n·w⁺ ≥ 0).
/// Shared by the full and the reduced impact maps.
struct JumpProblem {
  std::function<Vec(const Vec&)> momentum;
  std::function<Mat(const Vec&)> hessian;
  std::function<double(const Vec&)> energy;
  Vec normal;
  Mat constraints;  // rows
  double constraint_tol = default_tolerances().constraint;
  double newton_tol = default_tolerances().newton_residual;
  double rank_tol = default_tolerances().rank;
};

struct JumpSolution {
  Vec w_plus;
  double lambda0 = 0.0;
  Vec lambda;
  int iterations = 0;
  bool kinetic_metric = true;  // reflection guess used the fiber Hessian
};

JumpSolution solve_elastic_jump(const JumpProblem& prob, const Vec& w_minus,
                                const ImpactOptions& opts = {});

/// Resolves the impact of `v_minus` at the boundary point q.
ImpactRecord impact_map(const SystemSpec& sys, const Vec& q, const Vec& v_minus, double t = 0.0,
                        const ImpactOptions& opts = {});

/// Throws ZenoSuspected when two consecutive impact times are closer than
/// the policy allows or the impact count exceeds the limit.
void zeno_guard(std::span<const double> impact_times, const ZenoPolicy& policy);
void zeno_guard(const std::vector<ImpactRecord>& events, const ZenoPolicy& policy);

struct ResetSeparation {
  double separation = 0.0;   // ‖R(v) − v‖_g, with R(v) formed explicitly
  double normal_norm = 0.0;  // ‖v^⊥‖_g
  bool kinetic_metric = true;
};

/// Zeno-remark quantity at a boundary point; g is the fiber Hessian when
/// positive definite, else the chart Euclidean metric.
ResetSeparation reset_separation(const SystemSpec& sys, const Vec& q, const Vec& v);

}  // namespace nsnh
