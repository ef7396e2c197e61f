#include "nsnh/lagrangian.hpp"

#include <algorithm>
#include <cmath>

#include "nsnh/linalg.hpp"

namespace nsnh {

Mat LagrangianSpec::mass(const Vec& q, const Vec& v) const {
  if (d2L_dvdv) return d2L_dvdv(q, v);
  Mat M = linalg::fd_jacobian([&](const Vec& w) { return dL_dv(q, w); }, v);
  return 0.5 * (M + M.transpose());
}

Mat LagrangianSpec::mixed(const Vec& q, const Vec& v) const {
  if (d2L_dvdq) return d2L_dvdq(q, v);
  return linalg::fd_jacobian([&](const Vec& x) { return dL_dv(x, v); }, q);
}

double energy(const LagrangianSpec& lag, const Vec& q, const Vec& v, const Vec& p) {
  return p.dot(v) - lag.L(q, v);
}

Vec legendre(const LagrangianSpec& lag, const Vec& q, const Vec& v) { return lag.dL_dv(q, v); }

Vec horizontal_derivative(const LagrangianSpec& lag, const ConnectionSpec& conn, const Vec& q,
                          const Vec& v) {
  Vec out = lag.dL_dq(q, v);
  if (conn.flat()) return out;
  const Vec p = lag.dL_dv(q, v);
  const Tensor3 gamma = conn.gamma(q);
  for (Eigen::Index k = 0; k < q.size(); ++k) out -= p(k) * (gamma[k] * v);
  return out;
}

Vec covariant_rate(const ConnectionSpec& conn, const Vec& q, const Vec& v, const Vec& p,
                   const Vec& pdot) {
  if (conn.flat()) return pdot;
  Vec out = pdot;
  const Tensor3 gamma = conn.gamma(q);
  for (Eigen::Index k = 0; k < q.size(); ++k) out -= p(k) * (gamma[k].transpose() * v);
  return out;
}

namespace {

double rel_error(const Mat& fd, const Mat& supplied) {
  return ((fd - supplied).cwiseAbs().array() / (1.0 + supplied.cwiseAbs().array())).maxCoeff();
}

}  // namespace

FdAuditReport fd_audit(const LagrangianSpec& lag,
                       const std::vector<std::pair<Vec, Vec>>& samples, const Tolerances& tol) {
  FdAuditReport rep;
  for (const auto& [q, v] : samples) {
    const Eigen::Index n = q.size();
    Vec fd_v(n), fd_q(n);
    Vec x = v;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = linalg::fd_step(v(i));
      x(i) = v(i) + h;
      const double lp = lag.L(q, x);
      x(i) = v(i) - h;
      const double lm = lag.L(q, x);
      x(i) = v(i);
      fd_v(i) = (lp - lm) / (2.0 * h);
    }
    x = q;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = linalg::fd_step(q(i));
      x(i) = q(i) + h;
      const double lp = lag.L(x, v);
      x(i) = q(i) - h;
      const double lm = lag.L(x, v);
      x(i) = q(i);
      fd_q(i) = (lp - lm) / (2.0 * h);
    }
    rep.dL_dv_error = std::max(rep.dL_dv_error, rel_error(fd_v, lag.dL_dv(q, v)));
    rep.dL_dq_error = std::max(rep.dL_dq_error, rel_error(fd_q, lag.dL_dq(q, v)));

    if (lag.d2L_dvdv) {
      const Mat M = lag.d2L_dvdv(q, v);
      const Mat fd = linalg::fd_jacobian([&](const Vec& w) { return lag.dL_dv(q, w); }, v);
      rep.d2L_dvdv_error = std::max(rep.d2L_dvdv_error, rel_error(fd, M));
      rep.d2L_dvdv_asymmetry =
          std::max(rep.d2L_dvdv_asymmetry, (M - M.transpose()).cwiseAbs().maxCoeff());
    }
    if (lag.d2L_dvdq) {
      const Mat fd = linalg::fd_jacobian([&](const Vec& y) { return lag.dL_dv(y, v); }, q);
      rep.d2L_dvdq_error = std::max(rep.d2L_dvdq_error, rel_error(fd, lag.d2L_dvdq(q, v)));
    }
  }
  rep.passed = rep.dL_dv_error <= tol.fd_derivative && rep.dL_dq_error <= tol.fd_derivative &&
               rep.d2L_dvdv_error <= tol.fd_derivative &&
               rep.d2L_dvdq_error <= tol.fd_derivative && rep.d2L_dvdv_asymmetry <= 1e-9;
  return rep;
}

}  // namespace nsnh
