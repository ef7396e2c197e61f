#pragma once

#include <vector>

#include "nsnh/common.hpp"

namespace nsnh {

/// Finite-dimensional Lie algebra in a basis e_1..e_k:
///   [e_a, e_b] = c^c_{ab} e_c,  stored at c[(c * k + a) * k + b].
/// `generators` (optional) are d×d matrices representing the basis, used for
/// group reconstruction.
struct LieAlgebraSpec {
  int k = 0;
  std::vector<double> c;
  std::vector<Mat> generators;

  double structure(int cc, int a, int b) const { return c[(cc * k + a) * k + b]; }
  bool abelian() const;
};

LieAlgebraSpec abelian_algebra(int k);
/// so(3) with c^c_{ab} = ε_{abc} and generators hat(e_a).
LieAlgebraSpec so3();

Mat hat(const Eigen::Vector3d& w);

/// [ξ, η]^c = c^c_{ab} ξ^a η^b.
Vec bracket(const LieAlgebraSpec& alg, const Vec& xi, const Vec& eta);

/// (ad*_ξ ρ)_b = sign · Σ_{a,c} c^c_{ab} ξ^a ρ_c. sign = +1 is the pairing
/// convention ⟨ad*_ξ ρ, η⟩ = ⟨ρ, [ξ, η]⟩.
Vec ad_star(const LieAlgebraSpec& alg, const Vec& xi, const Vec& rho, double sign = 1.0);

/// Σ_a ξ^a E_a. Throws MissingGenerators if the algebra has none.
Mat generator_combination(const LieAlgebraSpec& alg, const Vec& xi);

struct AlgebraDefects {
  double antisymmetry = 0.0;
  double jacobi = 0.0;
  double generators = 0.0;  // |[E_a, E_b] − c^c_ab E_c|, 0 if no generators
};

AlgebraDefects algebra_defects(const LieAlgebraSpec& alg);

/// Throws InvalidParams unless antisymmetry is exact and Jacobi holds to 1e-12.
void validate_algebra(const LieAlgebraSpec& alg);

}  // namespace nsnh
