#include "nsnh/geometry.hpp"

#include <cmath>
#include <set>

#include "nsnh/linalg.hpp"
#include "nsnh/log.hpp"

namespace nsnh {

void ChartSpec::validate() const {
  if (dim < 1) throw SimError(ErrorKind::InvalidParams, "chart dimension must be >= 1");
  if (static_cast<int>(coord_names.size()) != dim) {
    throw SimError(ErrorKind::InvalidParams, "chart needs exactly dim coordinate names");
  }
  std::set<std::string> seen(coord_names.begin(), coord_names.end());
  if (static_cast<int>(seen.size()) != dim) {
    throw SimError(ErrorKind::InvalidParams, "coordinate names must be distinct");
  }
  if (!periodic.empty() && static_cast<int>(periodic.size()) != dim) {
    throw SimError(ErrorKind::InvalidParams, "periodic flags must match dim");
  }
}

Mat DistributionSpec::rows(const Vec& q) const {
  if (m == 0 || !mu) return Mat(0, width(q));
  Mat out = mu(q);
  if (out.rows() != m || out.cols() != width(q)) {
    throw SimError(ErrorKind::InvalidParams, "mu(q) has the wrong shape");
  }
  return out;
}

Tensor3 DistributionSpec::derivative(const Vec& q) const {
  if (m == 0) return {};
  if (dmu) return dmu(q);
  const Eigen::Index n = q.size();
  Tensor3 out(m, Mat::Zero(width(q), n));
  Vec qp = q;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = linalg::fd_step(q(j));
    qp(j) = q(j) + h;
    const Mat plus = rows(qp);
    qp(j) = q(j) - h;
    const Mat minus = rows(qp);
    qp(j) = q(j);
    const Mat diff = (plus - minus) / (2.0 * h);
    for (int a = 0; a < m; ++a) out[a].col(j) = diff.row(a).transpose();
  }
  return out;
}

Vec DistributionSpec::rate_term(const Vec& q, const Vec& v, const Vec& w) const {
  Vec out(m);
  if (m == 0) return out;
  const Tensor3 d = derivative(q);
  for (int a = 0; a < m; ++a) out(a) = w.dot(d[a] * v);
  return out;
}

Vec DistributionSpec::quadratic_term(const Vec& q, const Vec& v) const {
  return rate_term(q, v, v);
}

Mat distribution_basis(const DistributionSpec& dist, const Vec& q, double rank_tol) {
  return linalg::null_space(dist.rows(q), rank_tol);
}

Coannihilator impact_coannihilator(const DistributionSpec& dist, const BoundarySpec& bnd,
                                   const Vec& q, const Tolerances& tol) {
  const double bval = bnd.b(q);
  if (std::abs(bval) > tol.boundary) {
    throw SimError(ErrorKind::NotOnBoundary, "|b(q)| = " + std::to_string(std::abs(bval)));
  }
  const Mat mu = dist.rows(q);
  Coannihilator out;
  out.rows.resize(mu.rows() + 1, q.size());
  out.rows.row(0) = bnd.db(q).transpose();
  if (mu.rows() > 0) out.rows.bottomRows(mu.rows()) = mu;
  out.rank = linalg::numerical_rank(out.rows, tol.rank);
  out.degenerate = out.rank < out.rows.rows();
  if (out.degenerate) {
    log::warn("impact coannihilator is rank deficient ({} < {})", out.rank, out.rows.rows());
  }
  return out;
}

}  // namespace nsnh
