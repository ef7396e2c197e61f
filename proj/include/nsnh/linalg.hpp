#pragma once

#include "nsnh/common.hpp"

namespace nsnh::linalg {

struct SaddleSolution {
  Vec x;
  Vec lambda;
};

/// Solves  H x = f + Dᵀ λ,  D x = g  (the KKT / saddle-point system shared by
/// the constrained right-hand sides and the velocity projections).
/// Throws SingularKKT when the saddle matrix is numerically singular or the
/// relative residual exceeds `residual_tol`.
SaddleSolution solve_saddle(const Mat& H, const Mat& D, const Vec& f, const Vec& g,
                            double residual_tol);

/// Orthonormal basis of ker(A) (A is m×n with m < n). Throws RankDeficient
/// when the smallest singular value is below rank_tol times the largest.
Mat null_space(const Mat& A, double rank_tol);

/// Numerical rank with the same relative threshold as null_space.
int numerical_rank(const Mat& A, double rank_tol);

/// Norm of the component of `target` outside the column span of `columns`.
double span_residual(const Mat& columns, const Vec& target);

/// Least-squares coefficients of `target` in the column span of `columns`.
Vec span_coefficients(const Mat& columns, const Vec& target);

/// Central-difference Jacobian of a vector function, step cbrt(eps)(1+|x_j|).
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x);

double fd_step(double x);

}  // namespace nsnh::linalg
