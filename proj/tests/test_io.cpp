#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "nsnh/io.hpp"

using namespace nsnh;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nsnh_test_io_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string usage_message(const json& j) {
  try {
    parse_config(j);
  } catch (const SimError& e) {
    CHECK(e.kind() == ErrorKind::UsageError);
    return e.what();
  }
  FAIL("config accepted");
  return {};
}

}  // namespace

TEST_CASE("config parsing is strict") {
  const json ok = {{"schema_version", 1}, {"scenario", "free_billiard"}};
  CHECK(parse_config(ok).scenario == "free_billiard");

  json extra = ok;
  extra["dt"] = 0.1;
  CHECK(usage_message(extra).find("'dt'") != std::string::npos);

  json missing = ok;
  missing.erase("schema_version");
  CHECK(usage_message(missing).find("schema_version") != std::string::npos);

  json wrong = ok;
  wrong["h"] = "small";
  CHECK(usage_message(wrong).find("'h'") != std::string::npos);

  json future = ok;
  future["schema_version"] = 2;
  CHECK(usage_message(future).find("schema_version") != std::string::npos);
}

TEST_CASE("config round trip") {
  RunConfig cfg;
  cfg.scenario = "spherical_pendulum";
  cfg.mode = "compare";
  cfg.params = {{"eps", 0.1 + 0.2}, {"constrained", true}, {"reduction", std::string("adapted")}};
  cfg.t_final = 1.0 / 3.0;
  cfg.h = 1e-4;
  cfg.tolerances = {{"equivalence", 3e-6}};
  cfg.seed = 42;
  cfg.paper_literal_vertical = true;
  const RunConfig back = parse_config(json::parse(serialize_config(cfg).dump()));
  CHECK(back == cfg);
}

TEST_CASE("config validation") {
  RunConfig cfg;
  cfg.scenario = "free_billiard";
  CHECK_NOTHROW(validate_config(cfg));
  cfg.h = -1e-3;
  try {
    validate_config(cfg);
    FAIL("negative h accepted");
  } catch (const SimError& e) {
    CHECK(std::string(e.what()).find("h must be positive") != std::string::npos);
  }
  cfg.h = 1e-3;
  cfg.mode = "compare";
  CHECK_THROWS_AS(validate_config(cfg), SimError);
  cfg.mode = "full";
  cfg.tolerances["bogus"] = 1.0;
  CHECK_THROWS_AS(validate_config(cfg), SimError);
  CHECK(apply_overrides({{"constraint", 1e-6}}).constraint == 1e-6);
}

TEST_CASE("parameter literals") {
  CHECK(std::get<double>(parse_param_literal("1.5")) == 1.5);
  CHECK(std::get<bool>(parse_param_literal("false")) == false);
  CHECK(std::get<std::string>(parse_param_literal("adapted")) == "adapted");
}

TEST_CASE("CSV format") {
  Trajectory traj;
  traj.samples.push_back({0.1, Vec{{1.0 / 3.0}}, Vec{{2.0}}, Vec{{-0.5}}});
  traj.diagnostics.push_back({0.7, 1e-17, 0.0});
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  const std::string s = os.str();
  CHECK(s.substr(0, s.find('\n')) == "t,q_1,v_1,p_1,energy,constraint_residual");
  const std::string row = s.substr(s.find('\n') + 1);
  CHECK(row.find("0.33333333333333331") != std::string::npos);
  // 17 significant digits round-trip exactly.
  CHECK(std::stod(row.substr(row.find(',') + 1)) == 1.0 / 3.0);
}

TEST_CASE("run: billiard fixture") {
  RunConfig cfg;
  cfg.scenario = "free_billiard";
  cfg.t_final = 10.0;
  cfg.out_dir = scratch("billiard").string();
  std::ostringstream log;
  CHECK(run(cfg, log) == 0);
  CHECK(log.str().find("[integrate]") != std::string::npos);

  const auto csv = lines(fs::path(cfg.out_dir) / "trajectory.csv");
  REQUIRE(csv.size() > 2);
  double last = -1.0;
  bool monotone = true;
  for (std::size_t i = 1; i < csv.size(); ++i) {
    const double t = std::stod(csv[i]);
    monotone = monotone && t > last;
    last = t;
  }
  CHECK(monotone);

  const auto events = lines(fs::path(cfg.out_dir) / "events.jsonl");
  REQUIRE(events.size() >= 1);
  const std::set<std::string> expected = {"t_impact", "q", "v_minus", "v_plus", "p_minus",
                                          "p_plus", "lambda0", "lambda", "e_minus", "e_plus"};
  double t_prev = -1.0;
  for (const auto& l : events) {
    const json e = json::parse(l);
    std::set<std::string> keys;
    for (const auto& [k, _] : e.items()) keys.insert(k);
    CHECK(keys == expected);
    CHECK(e["t_impact"].get<double>() > t_prev);
    t_prev = e["t_impact"].get<double>();
  }
  const json report = json::parse(std::ifstream(fs::path(cfg.out_dir) / "report.json"));
  CHECK(report["passed"].get<bool>());
}

TEST_CASE("run: compare mode writes the equivalence report") {
  RunConfig cfg;
  cfg.scenario = "spherical_pendulum";
  cfg.mode = "compare";
  cfg.t_final = 0.5;
  cfg.params["reduction"] = std::string("adapted");
  cfg.out_dir = scratch("compare").string();
  std::ostringstream log;
  CHECK(run(cfg, log) == 0);
  for (const char* f : {"trajectory.csv", "trajectory_reduced.csv", "events.jsonl",
                        "equivalence.json", "report.json"}) {
    CHECK_MESSAGE(fs::exists(fs::path(cfg.out_dir) / f), f);
  }
  const json eq = json::parse(std::ifstream(fs::path(cfg.out_dir) / "equivalence.json"));
  CHECK(eq["passed"].get<bool>());
}

TEST_CASE("run: usage errors exit with 2") {
  RunConfig cfg;
  cfg.scenario = "free_billiard";
  cfg.h = -0.1;
  cfg.out_dir = scratch("usage").string();
  std::ostringstream log;
  CHECK(run(cfg, log) == 2);
  CHECK(log.str().find("h must be positive") != std::string::npos);
  CHECK_FALSE(fs::exists(cfg.out_dir));
}

TEST_CASE("CLI exit codes") {
  const std::string cli = NSNH_CLI;
  const auto out = scratch("cli");
  const auto status = [](const std::string& cmd) {
    const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  CHECK(status(cli + " --scenario free_billiard --dt -1 --out-dir " + out.string()) == 2);
  CHECK(status(cli + " --scenario free_billiard --bogus") == 2);
  CHECK(status(cli + " --scenario nope --out-dir " + out.string()) == 2);
  CHECK(status(cli + " --scenario free_billiard --t-final 1 --out-dir " + out.string()) == 0);
  CHECK(status(cli + " --list") == 0);
}
