#include "nsnh/linalg.hpp"

#include <cmath>
#include <limits>

namespace nsnh::linalg {

SaddleSolution solve_saddle(const Mat& H, const Mat& D, const Vec& f, const Vec& g,
                            double residual_tol) {
  const Eigen::Index n = H.rows();
  const Eigen::Index m = D.rows();
  if (m == 0) {
    Eigen::FullPivLU<Mat> lu(H);
    lu.setThreshold(1e-13);
    if (!lu.isInvertible()) {
      throw SimError(ErrorKind::SingularKKT, "mass matrix is singular");
    }
    SaddleSolution out{lu.solve(f), Vec(0)};
    const double res = (H * out.x - f).norm();
    if (res > residual_tol * (H.norm() * out.x.norm() + f.norm() + 1e-300)) {
      throw SimError(ErrorKind::SingularKKT, "mass matrix solve residual too large");
    }
    return out;
  }

  Mat K = Mat::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = H;
  K.topRightCorner(n, m) = D.transpose();
  K.bottomLeftCorner(m, n) = D;
  Vec rhs(n + m);
  rhs << f, g;

  Eigen::FullPivLU<Mat> lu(K);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) {
    throw SimError(ErrorKind::SingularKKT, "saddle-point matrix is singular");
  }
  const Vec z = lu.solve(rhs);
  const double res = (K * z - rhs).norm();
  if (res > residual_tol * (K.norm() * z.norm() + rhs.norm() + 1e-300)) {
    throw SimError(ErrorKind::SingularKKT, "saddle-point residual too large");
  }
  // Unknown vector is (x, -lambda).
  return {z.head(n), -z.tail(m)};
}

Mat null_space(const Mat& A, double rank_tol) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (m == 0) return Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (s.size() < m || s(m - 1) <= rank_tol * s(0)) {
    throw SimError(ErrorKind::RankDeficient,
                   "annihilator rows are linearly dependent (sigma_min/sigma_max = " +
                       std::to_string(s.size() < m || s(0) == 0.0 ? 0.0 : s(m - 1) / s(0)) + ")");
  }
  return svd.matrixV().rightCols(n - m);
}

int numerical_rank(const Mat& A, double rank_tol) {
  if (A.rows() == 0 || A.cols() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(A);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rank_tol * s(0)) ++r;
  }
  return r;
}

Vec span_coefficients(const Mat& columns, const Vec& target) {
  if (columns.cols() == 0) return Vec(0);
  return columns.completeOrthogonalDecomposition().solve(target);
}

double span_residual(const Mat& columns, const Vec& target) {
  if (columns.cols() == 0) return target.norm();
  return (columns * span_coefficients(columns, target) - target).norm();
}

double fd_step(double x) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * (1.0 + std::abs(x));
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x) {
  const Vec f0 = f(x);
  Mat J(f0.size(), x.size());
  Vec xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = fd_step(x(j));
    xp(j) = x(j) + h;
    const Vec fp = f(xp);
    xp(j) = x(j) - h;
    const Vec fm = f(xp);
    xp(j) = x(j);
    J.col(j) = (fp - fm) / (2.0 * h);
  }
  return J;
}

}  // namespace nsnh::linalg
