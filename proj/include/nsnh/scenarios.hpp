#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nsnh/reduction.hpp"
#include "nsnh/system.hpp"

namespace nsnh {

using ParamValue = std::variant<double, bool, std::string>;
using Params = std::map<std::string, ParamValue>;

struct ParamSchema {
  std::string name;
  ParamValue default_value;
  std::string description;
  enum class Bound { none, positive, above_minus_one } bound = Bound::none;
  std::vector<std::string> choices;  // string parameters only
};

struct ScenarioInfo {
  std::string name;
  std::string description;
  bool from_paper = true;
  std::vector<std::string> modes;  // subset of full, reduced, compare, eps
  std::vector<ParamSchema> params;
};

/// A built scenario. Which members are set depends on the scenario's modes.
struct Scenario {
  ScenarioInfo info;
  Params params;  // fully resolved (defaults + overrides)

  std::optional<SystemSpec> full;
  std::optional<PontryaginState> full_initial;

  std::optional<ReducedSystemSpec> reduced;
  std::optional<ReducedState> reduced_initial;
  std::optional<BundleLayout> layout;
  /// Configuration guard for the full system when it is compared against a
  /// reduced model (non-free orbits at θ = kπ).
  std::function<void(const Vec&)> full_guard;

  std::optional<EpsSystem> eps;
  std::optional<Vec> eps_initial;

  double param(const std::string& key) const;
  bool flag(const std::string& key) const;
  const std::string& choice(const std::string& key) const;
};

/// Registered scenarios in a fixed order.
const std::vector<ScenarioInfo>& list_scenarios();
const ScenarioInfo& scenario_info(const std::string& name);

/// Defaults merged with `overrides`; throws UnknownScenario or InvalidParams.
Params resolve_params(const std::string& name, const Params& overrides);

Scenario build(const std::string& name, const Params& overrides = {});

std::string to_string(const ParamValue& v);

}  // namespace nsnh
