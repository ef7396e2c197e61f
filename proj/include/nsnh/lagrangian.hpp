#pragma once

#include <utility>
#include <vector>

#include "nsnh/common.hpp"
#include "nsnh/geometry.hpp"

namespace nsnh {

/// Lagrangian on TQ in chart coordinates. Second derivatives are optional and
/// default to central differences of dL_dv.
struct LagrangianSpec {
  std::function<double(const Vec&, const Vec&)> L;
  std::function<Vec(const Vec&, const Vec&)> dL_dv;
  std::function<Vec(const Vec&, const Vec&)> dL_dq;
  std::function<Mat(const Vec&, const Vec&)> d2L_dvdv;
  std::function<Mat(const Vec&, const Vec&)> d2L_dvdq;  // (i, j) = d(dL_dv_i)/dq_j

  /// Fiber Hessian M(q, v) = d2L/dv2.
  Mat mass(const Vec& q, const Vec& v) const;
  /// Mixed Hessian d(dL_dv)/dq.
  Mat mixed(const Vec& q, const Vec& v) const;
};

/// Point (t, q, v, p) of the Pontryagin bundle TQ ⊕ T*Q.
struct PontryaginState {
  double t = 0.0;
  Vec q;
  Vec v;
  Vec p;
};

/// E = p·v − L(q, v).
double energy(const LagrangianSpec& lag, const Vec& q, const Vec& v, const Vec& p);

/// Fiber derivative p = dL/dv(q, v). Degenerate Lagrangians are allowed here.
Vec legendre(const LagrangianSpec& lag, const Vec& q, const Vec& v);

/// δL/δq for the given connection: dL/dq_i − p_k Γ^k_ij v^j.
Vec horizontal_derivative(const LagrangianSpec& lag, const ConnectionSpec& conn, const Vec& q,
                          const Vec& v);

/// Covariant rate of a covector along q̇ = v: ṗ_i − Γ^k_ji v^j p_k.
Vec covariant_rate(const ConnectionSpec& conn, const Vec& q, const Vec& v, const Vec& p,
                   const Vec& pdot);

struct FdAuditReport {
  double dL_dv_error = 0.0;
  double dL_dq_error = 0.0;
  double d2L_dvdv_error = 0.0;  // 0 when not supplied
  double d2L_dvdq_error = 0.0;
  double d2L_dvdv_asymmetry = 0.0;
  bool passed = true;
};

/// Compares the supplied derivatives against central differences of L (and of
/// dL_dv for the second derivatives). Errors are |fd − supplied| / (1 + |supplied|).
FdAuditReport fd_audit(const LagrangianSpec& lag,
                       const std::vector<std::pair<Vec, Vec>>& samples,
                       const Tolerances& tol = default_tolerances());

}  // namespace nsnh
