#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nsnh/geometry.hpp"
#include "nsnh/lagrangian.hpp"

namespace nsnh {

/// Full problem definition for a nonholonomic system with a boundary.
struct SystemSpec {
  std::string name;
  ChartSpec chart;
  LagrangianSpec lagrangian;
  DistributionSpec distribution;
  std::optional<BoundarySpec> boundary;
  ConnectionSpec connection;
  Tolerances tol = default_tolerances();
  /// Optional admissibility check on configurations; throws to abort a run.
  std::function<void(const Vec&)> guard;

  int dim() const { return chart.dim; }
};

struct GeometryCheck {
  std::string name;
  bool passed = true;
  double worst = 0.0;
  std::string detail;
};

struct GeometryReport {
  std::vector<GeometryCheck> checks;

  bool passed() const;
  const GeometryCheck* find(const std::string& name) const;
};

/// Report-only check of the chart, boundary gradient, distribution rank and
/// annihilation, and (when supplied) dmu against finite differences.
GeometryReport validate_geometry(const SystemSpec& sys, const std::vector<Vec>& sample_points);

}  // namespace nsnh
