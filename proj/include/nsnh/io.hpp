#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include <json.hpp>

#include "nsnh/audit.hpp"
#include "nsnh/scenarios.hpp"

namespace nsnh {

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::string scenario;
  Params params;
  std::string mode = "full";  // full | reduced | compare | eps
  double t_final = 10.0;
  double h = 1e-3;
  std::map<std::string, double> tolerances;  // overrides by table name
  std::string out_dir = "out";
  bool audit = true;
  bool paper_literal_vertical = false;
  std::uint64_t seed = 0;

  bool operator==(const RunConfig&) const = default;
};

/// Strict parse: unknown keys, wrong types and invalid values throw UsageError
/// with the offending field named.
RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_file(const std::string& path);
nlohmann::json serialize_config(const RunConfig& cfg);

/// Checks value constraints (t_final > 0, h > 0, known scenario and mode, ...).
void validate_config(const RunConfig& cfg);

Tolerances apply_overrides(const std::map<std::string, double>& overrides);
/// Names accepted in the "tolerances" object, in table order.
const std::vector<std::string>& tolerance_names();

ParamValue parse_param_literal(const std::string& text);

// Serialization of results.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_reduced_csv(std::ostream& os, const ReducedTrajectory& traj);
void write_eps_csv(std::ostream& os, const ReducedTrajectory& traj);
void write_events_jsonl(std::ostream& os, const std::vector<ImpactRecord>& events);
void write_reduced_events_jsonl(std::ostream& os, const std::vector<ReducedImpactRecord>& events);
nlohmann::json to_json(const AuditReport& rep);
nlohmann::json to_json(const ImpactRecord& rec);

/// Runs one configuration and writes its artifacts into cfg.out_dir.
/// Returns 0 when every audit passes, 1 on audit or simulation failure and 2
/// on usage errors. A one-line summary per phase goes to `log`.
int run(const RunConfig& cfg, std::ostream& log);

}  // namespace nsnh
