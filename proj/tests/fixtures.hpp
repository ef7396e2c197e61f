#pragma once
// Small hand-built systems shared by the unit tests.
#include <random>

#include "nsnh/scenarios.hpp"

namespace fx {

using nsnh::Mat;
using nsnh::Vec;

inline nsnh::SystemSpec free_particle(int n) {
  nsnh::SystemSpec sys;
  sys.name = "free_particle";
  sys.chart.dim = n;
  for (int i = 0; i < n; ++i) {
    sys.chart.coord_names.push_back("x" + std::to_string(i + 1));
    sys.chart.periodic.push_back(false);
  }
  auto& lag = sys.lagrangian;
  lag.L = [](const Vec&, const Vec& v) { return 0.5 * v.squaredNorm(); };
  lag.dL_dv = [](const Vec&, const Vec& v) -> Vec { return v; };
  lag.dL_dq = [](const Vec& q, const Vec&) -> Vec { return Vec::Zero(q.size()); };
  lag.d2L_dvdv = [](const Vec& q, const Vec&) -> Mat { return Mat::Identity(q.size(), q.size()); };
  lag.d2L_dvdq = [](const Vec& q, const Vec&) -> Mat { return Mat::Zero(q.size(), q.size()); };
  return sys;
}

inline nsnh::SystemSpec unit_disk_billiard() {
  nsnh::SystemSpec sys = free_particle(2);
  sys.boundary = nsnh::BoundarySpec{[](const Vec& q) { return q.squaredNorm() - 1.0; },
                                    [](const Vec& q) -> Vec { return 2.0 * q; }};
  return sys;
}

inline nsnh::Scenario scenario(const std::string& name, nsnh::Params p = {}) {
  return nsnh::build(name, p);
}

inline Vec random_vec(std::mt19937_64& rng, int n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> U(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = U(rng);
  return v;
}

}  // namespace fx
