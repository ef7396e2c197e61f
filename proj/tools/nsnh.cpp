// nsnh: run one (or, with several --config files, a few isolated) simulations.
#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "nsnh/io.hpp"

namespace {

struct Overrides {
  std::string scenario, mode, out_dir;
  double t_final = 0.0, h = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> sets;
  std::vector<std::string> tols;
};

void apply(nsnh::RunConfig& cfg, const Overrides& o, const CLI::App& app) {
  if (app.count("--scenario")) cfg.scenario = o.scenario;
  if (app.count("--mode")) cfg.mode = o.mode;
  if (app.count("--t-final")) cfg.t_final = o.t_final;
  if (app.count("--dt")) cfg.h = o.h;
  if (app.count("--out-dir")) cfg.out_dir = o.out_dir;
  if (app.count("--seed")) cfg.seed = o.seed;
  if (app.count("--paper-literal-vertical")) cfg.paper_literal_vertical = true;
  if (app.count("--audit")) cfg.audit = app.get_option("--audit")->as<bool>();
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw nsnh::SimError(nsnh::ErrorKind::UsageError, "--set expects key=value, got '" + kv + "'");
    }
    cfg.params[kv.substr(0, eq)] = nsnh::parse_param_literal(kv.substr(eq + 1));
  }
  for (const auto& kv : o.tols) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw nsnh::SimError(nsnh::ErrorKind::UsageError, "--tol expects name=value, got '" + kv + "'");
    }
    try {
      cfg.tolerances[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw nsnh::SimError(nsnh::ErrorKind::UsageError, "--tol value for '" + kv.substr(0, eq) +
                                                            "' is not a number");
    }
  }
}

void list(std::ostream& os) {
  for (const auto& s : nsnh::list_scenarios()) {
    os << s.name << (s.from_paper ? "  [paper]" : "") << "\n  " << s.description << "\n  modes:";
    for (const auto& m : s.modes) os << ' ' << m;
    os << '\n';
    for (const auto& p : s.params) {
      os << "    " << p.name << " = " << nsnh::to_string(p.default_value);
      if (!p.choices.empty()) {
        os << " {";
        for (std::size_t i = 0; i < p.choices.size(); ++i) os << (i ? "|" : "") << p.choices[i];
        os << '}';
      }
      os << "  " << p.description << '\n';
    }
  }
  os << "tolerances:";
  for (const auto& t : nsnh::tolerance_names()) os << ' ' << t;
  os << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonholonomic mechanics with elastic impacts"};
  Overrides o;
  std::vector<std::string> configs;
  unsigned jobs = 1;
  bool want_list = false;

  app.add_option("--config", configs, "JSON run config (repeatable)")->check(CLI::ExistingFile);
  app.add_option("--scenario", o.scenario, "scenario name (see --list)");
  app.add_option("--mode", o.mode, "full | reduced | compare | eps");
  app.add_option("--t-final", o.t_final, "final time");
  app.add_option("--dt", o.h, "step size");
  app.add_option("--out-dir", o.out_dir, "output directory");
  app.add_flag("--audit,!--no-audit", "run the verification harness (default on)");
  app.add_flag("--paper-literal-vertical", "drop vertical constraint rows in the reduced model");
  app.add_option("--seed", o.seed, "seed for randomized audits");
  app.add_option("--set", o.sets, "scenario parameter key=value (repeatable)");
  app.add_option("--tol", o.tols, "tolerance override name=value (repeatable)");
  app.add_option("--jobs", jobs, "parallel runs when several configs are given")
      ->check(CLI::PositiveNumber);
  app.add_flag("--list", want_list, "list scenarios, parameters and tolerances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (want_list) {
    list(std::cout);
    return 0;
  }

  std::vector<nsnh::RunConfig> runs;
  try {
    if (configs.empty()) {
      if (!app.count("--scenario")) {
        std::cerr << "error: either --config or --scenario is required\n";
        return 2;
      }
      runs.emplace_back();
    } else {
      for (const auto& path : configs) runs.push_back(nsnh::parse_config_file(path));
    }
    for (auto& cfg : runs) apply(cfg, o, app);
  } catch (const nsnh::SimError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  std::set<std::string> dirs;
  for (const auto& cfg : runs) {
    if (!dirs.insert(cfg.out_dir).second) {
      std::cerr << "error: out_dir '" << cfg.out_dir << "' is shared by several configs\n";
      return 2;
    }
  }

  // Each run owns its output directory and log buffer; logs are printed in
  // config order once everything has finished.
  std::vector<std::ostringstream> logs(runs.size());
  std::vector<int> codes(runs.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < runs.size();) codes[i] = nsnh::run(runs[i], logs[i]);
  };
  const unsigned n_threads = std::min<std::size_t>(jobs, runs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  int code = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::cout << logs[i].str();
    code = std::max(code, codes[i]);
  }
  return code;
}
