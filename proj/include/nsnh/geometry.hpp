#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nsnh/common.hpp"

namespace nsnh {

/// Single coordinate chart on the configuration manifold.
struct ChartSpec {
  int dim = 0;
  std::vector<std::string> coord_names;
  std::vector<bool> periodic;

  /// Throws InvalidParams if dim < 1 or names are missing / duplicated.
  void validate() const;
};

/// Configuration boundary as the zero set of b. Interior is {b < 0}.
struct BoundarySpec {
  std::function<double(const Vec&)> b;
  std::function<Vec(const Vec&)> db;
};

/// Constraint distribution given by its annihilator: the m rows of mu(q) are
/// the one-forms mu^a(q). dmu(q)[a](i, j) = d mu^a_i / d q^j; when absent it
/// is finite-differenced.
struct DistributionSpec {
  int m = 0;
  /// Width of the rows; 0 means the rows are covectors on the point space.
  /// Nonzero is used for algebra-valued constraints parametrized by shape.
  int cols = 0;
  std::function<Mat(const Vec&)> mu;
  std::function<Tensor3(const Vec&)> dmu;

  Mat rows(const Vec& q) const;
  Eigen::Index width(const Vec& q) const { return cols > 0 ? cols : q.size(); }
  Tensor3 derivative(const Vec& q) const;

  /// (Dmu(q) v) v, the velocity-quadratic term of the differentiated constraint.
  Vec quadratic_term(const Vec& q, const Vec& v) const;

  /// d/dt (mu(q)) · w along q̇ = v, i.e. sum_j dmu[a](i, j) v_j w_i.
  Vec rate_term(const Vec& q, const Vec& v, const Vec& w) const;
};

/// Linear connection on TQ by its Christoffel symbols gamma(q)[i](j, k) = Γ^i_jk.
/// Empty means the flat chart connection.
struct ConnectionSpec {
  std::function<Tensor3(const Vec&)> gamma;

  bool flat() const { return !gamma; }
};

/// (n − m) orthonormal columns spanning Δ_Q(q).
Mat distribution_basis(const DistributionSpec& dist, const Vec& q,
                       double rank_tol = default_tolerances().rank);

struct Coannihilator {
  Mat rows;  // db(q) stacked over mu(q), verbatim
  int rank = 0;
  bool degenerate = false;
};

/// Rows spanning (T_q∂Q ∩ Δ_Q(q))° = (T_q∂Q)° + Δ_Q°(q).
Coannihilator impact_coannihilator(const DistributionSpec& dist, const BoundarySpec& bnd,
                                   const Vec& q, const Tolerances& tol = default_tolerances());

}  // namespace nsnh
