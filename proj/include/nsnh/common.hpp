#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nsnh {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Third-order array stored as a list of matrices: T[a](i, j).
using Tensor3 = std::vector<Mat>;

enum class ErrorKind {
  RankDeficient,
  NotOnBoundary,
  SingularKKT,
  ConstraintDriftExceeded,
  ZenoSuspected,
  TrivialRootOnly,
  NoConvergence,
  DegenerateContact,
  MissingGenerators,
  LayoutMismatch,
  GridMismatch,
  UnknownScenario,
  InvalidParams,
  InvalidState,
  UsageError,
};

std::string_view to_string(ErrorKind kind);

/// Every library failure is reported through this exception; `kind()` is the
/// stable machine-readable part, `what()` the human one.
class SimError : public std::runtime_error {
 public:
  SimError(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Central tolerance table. Every check in the library and the audit harness
/// reads its threshold from here.
struct Tolerances {
  double rank = 1e-10;            // relative to the largest singular value
  double boundary = 1e-9;         // |b(q)| on located impact points
  double legendre = 1e-9;         // scaled by (1 + |p|_inf)
  double constraint = 1e-8;       // |mu(q) v|_inf
  double kkt_residual = 1e-10;    // relative residual of saddle-point solves
  double energy_drift = 1e-7;     // relative, between impacts
  double energy_jump = 1e-10;     // |e+ - e-| at impacts
  double jump = 1e-9;             // momentum jump containment, scaled
  double force_containment = 1e-6;
  double energy_balance = 1e-8;   // |force·v| / (1 + |E|)
  double eps_containment = 1e-9;  // μ̇ − ad*_ξ μ modulo d°
  double fd_derivative = 1e-6;    // finite-difference audits
  double newton_residual = 1e-11; // scaled
  double equivalence = 1e-5;      // full vs reduced sup-norm
  double angle_guard = 1e-3;      // distance to non-free orbits
};

const Tolerances& default_tolerances();

double inf_norm(const Vec& v);

}  // namespace nsnh
