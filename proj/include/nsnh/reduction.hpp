#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nsnh/geometry.hpp"
#include "nsnh/impact.hpp"
#include "nsnh/integrator.hpp"
#include "nsnh/lagrangian.hpp"
#include "nsnh/lie_algebra.hpp"

namespace nsnh {

/// Reduced Lagrangian ℓ(σ, u, ξ) on TΣ ⊕ g̃ in a trivialized chart.
/// The optional Hessians are with respect to w = (u, ξ):
///   d2ell_dw2 is (r+k)×(r+k); d2ell_dwdsigma is (r+k)×r, the σ-derivative of
///   (dell_du, dell_dxi). Missing ones are finite-differenced.
struct ReducedLagrangian {
  std::function<double(const Vec&, const Vec&, const Vec&)> ell;
  std::function<Vec(const Vec&, const Vec&, const Vec&)> dell_dsigma;
  std::function<Vec(const Vec&, const Vec&, const Vec&)> dell_du;
  std::function<Vec(const Vec&, const Vec&, const Vec&)> dell_dxi;
  std::function<Mat(const Vec&, const Vec&, const Vec&)> d2ell_dw2;
  std::function<Mat(const Vec&, const Vec&, const Vec&)> d2ell_dwdsigma;
};

/// paper_literal: the vertical equation carries no Δ_g̃° force (λ_v ≡ 0) and
/// the Δ_g̃ constraint is only reported. well_posed: λ_v is a free multiplier.
enum class VerticalMode { well_posed, paper_literal };

/// Reduced problem on a trivialized bundle Q = Σ × G.
///   ξ = g⁻¹ġ − A(σ) σ̇,  reconstruction ġ = g (ξ + A σ̇).
/// B is the curvature of that connection, B[a](i, j), antisymmetric in (i, j);
/// for an abelian group B[a](i, j) = ∂_j A_ai − ∂_i A_aj.
struct ReducedSystemSpec {
  std::string name;
  int r = 0;
  LieAlgebraSpec algebra;
  ReducedLagrangian lag;
  DistributionSpec delta_sigma;   // m_h rows of width r
  DistributionSpec delta_gtilde;  // m_v rows of width k (cols = k), functions of σ
  std::function<Mat(const Vec&)> A;      // k×r, empty = 0
  std::function<Tensor3(const Vec&)> B;  // k entries r×r, empty = 0
  std::optional<BoundarySpec> boundary;  // on Σ
  VerticalMode vertical = VerticalMode::well_posed;
  double coadjoint_sign = 1.0;
  Tolerances tol = default_tolerances();
  std::function<void(const Vec&)> guard;  // on σ

  int k() const { return algebra.k; }
  Mat connection(const Vec& sigma) const;
  Tensor3 curvature(const Vec& sigma) const;
  Mat hessian(const Vec& sigma, const Vec& u, const Vec& xi) const;
  Mat mixed(const Vec& sigma, const Vec& u, const Vec& xi) const;
  /// (dell_du, dell_dxi) stacked.
  Vec momentum(const Vec& sigma, const Vec& u, const Vec& xi) const;
};

/// Throws InvalidParams on a bad algebra, a non-antisymmetric B, or A ≡ 0 with B ≠ 0
/// (checked at the given sample shapes).
void validate_reduced(const ReducedSystemSpec& spec, const std::vector<Vec>& sigma_samples);

struct ReducedState {
  double t = 0.0;
  Vec sigma, u, y, xi, rho;
};

double reduced_energy(const ReducedSystemSpec& spec, const Vec& sigma, const Vec& u,
                      const Vec& xi, const Vec& y, const Vec& rho);
inline double reduced_energy(const ReducedSystemSpec& spec, const ReducedState& s) {
  return reduced_energy(spec, s.sigma, s.u, s.xi, s.y, s.rho);
}

struct LpRate {
  Vec udot, xidot;
  Vec lambda_h, lambda_v;
  /// |D_v ξ̇ + rate term|_inf; nonzero only in paper-literal mode.
  double vertical_residual = 0.0;
};

/// Index-reduced nonholonomic Lagrange–Poincaré right-hand side:
///   ẏ = ℓ_σ − ρ·(i_u B) + D_hᵀλ_h
///   ρ̇ = s (ad*_ξ ρ − ad*_{A u} ρ) + D_vᵀλ_v
/// with the differentiated constraints D_h u = 0, D_v ξ = 0.
LpRate lp_rhs(const ReducedSystemSpec& spec, const Vec& sigma, const Vec& u, const Vec& xi);

/// Euler–Poincaré–Suslov system: Σ is a point.
struct EpsSystem {
  LieAlgebraSpec algebra;
  std::function<double(const Vec&)> ell;
  std::function<Vec(const Vec&)> dell_dxi;
  std::function<Mat(const Vec&)> d2ell_dxi2;  // optional
  Mat d_annihilator;  // rows spanning d° (m×k), may be empty
  double coadjoint_sign = 1.0;
  Tolerances tol = default_tolerances();
};

ReducedSystemSpec as_reduced(const EpsSystem& eps);

struct EpsRate {
  Vec xidot;
  Vec lambda;
};

/// μ = δℓ/δξ, μ̇ − ad*_ξ μ = λᵀ d°, ξ ∈ d.
EpsRate eps_rhs(const EpsSystem& eps, const Vec& xi);

struct ReducedImpactRecord {
  double t_impact = 0.0;
  Vec sigma;
  Vec u_minus, u_plus, xi_minus, xi_plus;
  Vec y_minus, y_plus, rho_minus, rho_plus;
  double lambda0 = 0.0;
  Vec lambda_h, lambda_v;
  double e_minus = 0.0, e_plus = 0.0;
  double vertical_residual = 0.0;  // |D_v ξ⁺|, paper-literal mode only
};

ReducedImpactRecord reduced_impact_map(const ReducedSystemSpec& spec, const Vec& sigma,
                                       const Vec& u_minus, const Vec& xi_minus, double t = 0.0,
                                       const ImpactOptions& opts = {});

struct ReducedDiagnostics {
  double energy = 0.0;
  double horizontal_residual = 0.0;  // |D_h u|
  double vertical_residual = 0.0;    // |D_v ξ|
  double legendre_residual = 0.0;    // scaled |(y, ρ) − ℓ_w|
};

struct ReducedTrajectory {
  std::vector<ReducedState> samples;
  std::vector<Vec> lambda_h, lambda_v;
  std::vector<ReducedDiagnostics> diagnostics;
  std::vector<int> segment;
  std::vector<ReducedImpactRecord> events;
  std::vector<double> grazes;
  double h = 0.0;
};

ReducedState reduced_step(const ReducedSystemSpec& spec, const ReducedState& s, double dt,
                          const IntegratorOptions& opts);

ReducedTrajectory integrate_reduced(const ReducedSystemSpec& spec, const ReducedState& s0,
                                    double t_final, const IntegratorOptions& opts);

ReducedDiagnostics reduced_diagnostics(const ReducedSystemSpec& spec, const ReducedState& s);

/// Index split of the full coordinates into shape and group (translation) parts.
struct BundleLayout {
  std::vector<int> shape_index;
  std::vector<int> group_index;
  std::function<Mat(const Vec&)> A;  // k×r, empty = 0

  Mat connection(const Vec& sigma) const;
};

/// σ, u from the shape components; ξ = v_g − A u; y = p_σ + Aᵀ p_g; ρ = p_g.
ReducedState reduce_state(const BundleLayout& layout, const PontryaginState& full);

/// Group coordinates of a full state (translation groups only).
Vec group_coordinates(const BundleLayout& layout, const Vec& q);

/// Reconstruction ġ = g · W(t) with W(t) = Σ w^a(t) E_a, fourth-order Magnus
/// steps of size h from t0 to t1. Returns g at t0, t0+h, ..., t1.
std::vector<Mat> reconstruct(const LieAlgebraSpec& alg, const std::function<Vec(double)>& w,
                             double t0, double t1, double h, const Mat& g0);

/// Reconstruction along a reduced trajectory, g at every sample. With
/// generators g is a matrix; an abelian algebra without generators returns the
/// k×1 group coordinates integrated by quadrature. Within each smooth segment
/// w = ξ + A u is interpolated by local cubics (event states close segments).
std::vector<Mat> reconstruct(const ReducedSystemSpec& spec, const ReducedTrajectory& traj,
                             const Mat& g0);

}  // namespace nsnh
