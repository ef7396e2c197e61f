#include "nsnh/lie_algebra.hpp"

#include <algorithm>
#include <cmath>

namespace nsnh {

bool LieAlgebraSpec::abelian() const {
  return std::all_of(c.begin(), c.end(), [](double x) { return x == 0.0; });
}

LieAlgebraSpec abelian_algebra(int k) {
  LieAlgebraSpec alg;
  alg.k = k;
  alg.c.assign(static_cast<std::size_t>(k) * k * k, 0.0);
  return alg;
}

Mat hat(const Eigen::Vector3d& w) {
  Mat m(3, 3);
  m << 0.0, -w(2), w(1),  //
      w(2), 0.0, -w(0),   //
      -w(1), w(0), 0.0;
  return m;
}

LieAlgebraSpec so3() {
  LieAlgebraSpec alg = abelian_algebra(3);
  auto set = [&](int cc, int a, int b, double v) { alg.c[(cc * 3 + a) * 3 + b] = v; };
  // ε_{abc}: [e1,e2]=e3, [e2,e3]=e1, [e3,e1]=e2
  set(2, 0, 1, 1.0);
  set(2, 1, 0, -1.0);
  set(0, 1, 2, 1.0);
  set(0, 2, 1, -1.0);
  set(1, 2, 0, 1.0);
  set(1, 0, 2, -1.0);
  for (int a = 0; a < 3; ++a) alg.generators.push_back(hat(Eigen::Vector3d::Unit(a)));
  return alg;
}

Vec bracket(const LieAlgebraSpec& alg, const Vec& xi, const Vec& eta) {
  Vec out = Vec::Zero(alg.k);
  for (int cc = 0; cc < alg.k; ++cc)
    for (int a = 0; a < alg.k; ++a)
      for (int b = 0; b < alg.k; ++b) out(cc) += alg.structure(cc, a, b) * xi(a) * eta(b);
  return out;
}

Vec ad_star(const LieAlgebraSpec& alg, const Vec& xi, const Vec& rho, double sign) {
  Vec out = Vec::Zero(alg.k);
  for (int b = 0; b < alg.k; ++b) {
    double s = 0.0;
    for (int a = 0; a < alg.k; ++a)
      for (int cc = 0; cc < alg.k; ++cc) s += alg.structure(cc, a, b) * xi(a) * rho(cc);
    out(b) = sign * s;
  }
  return out;
}

Mat generator_combination(const LieAlgebraSpec& alg, const Vec& xi) {
  if (static_cast<int>(alg.generators.size()) != alg.k) {
    throw SimError(ErrorKind::MissingGenerators, "algebra has no matrix generators");
  }
  Mat out = Mat::Zero(alg.generators[0].rows(), alg.generators[0].cols());
  for (int a = 0; a < alg.k; ++a) out += xi(a) * alg.generators[a];
  return out;
}

AlgebraDefects algebra_defects(const LieAlgebraSpec& alg) {
  AlgebraDefects d;
  const int k = alg.k;
  for (int cc = 0; cc < k; ++cc)
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        d.antisymmetry =
            std::max(d.antisymmetry, std::abs(alg.structure(cc, a, b) + alg.structure(cc, b, a)));

  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      for (int cc = 0; cc < k; ++cc)
        for (int dd = 0; dd < k; ++dd) {
          double s = 0.0;
          for (int e = 0; e < k; ++e) {
            s += alg.structure(e, a, b) * alg.structure(dd, e, cc) +
                 alg.structure(e, b, cc) * alg.structure(dd, e, a) +
                 alg.structure(e, cc, a) * alg.structure(dd, e, b);
          }
          d.jacobi = std::max(d.jacobi, std::abs(s));
        }

  if (static_cast<int>(alg.generators.size()) == k) {
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) {
        const Mat& Ea = alg.generators[a];
        const Mat& Eb = alg.generators[b];
        Mat diff = Ea * Eb - Eb * Ea;
        for (int cc = 0; cc < k; ++cc) diff -= alg.structure(cc, a, b) * alg.generators[cc];
        d.generators = std::max(d.generators, diff.cwiseAbs().maxCoeff());
      }
  }
  return d;
}

void validate_algebra(const LieAlgebraSpec& alg) {
  if (alg.k < 0 || alg.c.size() != static_cast<std::size_t>(alg.k) * alg.k * alg.k) {
    throw SimError(ErrorKind::InvalidParams, "structure constants must have k^3 entries");
  }
  const AlgebraDefects d = algebra_defects(alg);
  if (d.antisymmetry != 0.0) {
    throw SimError(ErrorKind::InvalidParams, "structure constants are not antisymmetric");
  }
  if (d.jacobi > 1e-12) {
    throw SimError(ErrorKind::InvalidParams,
                   "structure constants violate the Jacobi identity by " + std::to_string(d.jacobi));
  }
  if (d.generators > 1e-12) {
    throw SimError(ErrorKind::InvalidParams, "matrix generators do not represent the algebra");
  }
}

}  // namespace nsnh
