#include "nsnh/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "nsnh/log.hpp"

namespace nsnh {

using nlohmann::json;

namespace {

[[noreturn]] void usage(const std::string& msg) { throw SimError(ErrorKind::UsageError, msg); }

const std::vector<std::pair<std::string, double Tolerances::*>>& tolerance_table() {
  static const std::vector<std::pair<std::string, double Tolerances::*>> table = {
      {"rank", &Tolerances::rank},
      {"boundary", &Tolerances::boundary},
      {"legendre", &Tolerances::legendre},
      {"constraint", &Tolerances::constraint},
      {"kkt_residual", &Tolerances::kkt_residual},
      {"energy_drift", &Tolerances::energy_drift},
      {"energy_jump", &Tolerances::energy_jump},
      {"jump", &Tolerances::jump},
      {"force_containment", &Tolerances::force_containment},
      {"energy_balance", &Tolerances::energy_balance},
      {"eps_containment", &Tolerances::eps_containment},
      {"fd_derivative", &Tolerances::fd_derivative},
      {"newton_residual", &Tolerances::newton_residual},
      {"equivalence", &Tolerances::equivalence},
      {"angle_guard", &Tolerances::angle_guard},
  };
  return table;
}

ParamValue param_from_json(const std::string& key, const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  usage("params." + key + " must be a number, boolean or string");
}

json param_to_json(const ParamValue& v) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  if (const bool* b = std::get_if<bool>(&v)) return *b;
  return std::get<std::string>(v);
}

template <class T>
T field(const json& j, const char* key, const char* type_name) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    usage(std::string("field '") + key + "' must be " + type_name);
  }
}

// Doubles are printed with 17 significant digits so they round-trip exactly.
void put(std::ostream& os, double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  os << buf;
}

void put_row(std::ostream& os, double t, std::initializer_list<const Vec*> blocks,
             std::initializer_list<double> tail) {
  put(os, t);
  for (const Vec* b : blocks) {
    for (Eigen::Index i = 0; i < b->size(); ++i) {
      os << ',';
      put(os, (*b)(i));
    }
  }
  for (double x : tail) {
    os << ',';
    put(os, x);
  }
  os << '\n';
}

void put_header(std::ostream& os, std::initializer_list<std::pair<const char*, Eigen::Index>> cols) {
  os << 't';
  for (const auto& [name, count] : cols) {
    for (Eigen::Index i = 1; i <= count; ++i) os << ',' << name << '_' << i;
  }
  os << ",energy,constraint_residual\n";
}

json vec_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

const std::vector<std::string>& tolerance_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : tolerance_table()) out.push_back(name);
    return out;
  }();
  return names;
}

Tolerances apply_overrides(const std::map<std::string, double>& overrides) {
  Tolerances tol = default_tolerances();
  for (const auto& [key, value] : overrides) {
    const auto& table = tolerance_table();
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const auto& e) { return e.first == key; });
    if (it == table.end()) usage("unknown tolerance 'tolerances." + key + "'");
    if (!(value > 0.0) || !std::isfinite(value)) {
      usage("tolerances." + key + " must be positive");
    }
    tol.*(it->second) = value;
  }
  return tol;
}

ParamValue parse_param_literal(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  char* end = nullptr;
  const double d = std::strtod(text.c_str(), &end);
  if (!text.empty() && end == text.c_str() + text.size()) return d;
  return text;
}

RunConfig parse_config(const json& j) {
  if (!j.is_object()) usage("config must be a JSON object");
  static const std::vector<std::string> known = {
      "schema_version", "scenario", "params", "mode",  "t_final", "h",
      "tolerances",     "out_dir",  "audit",  "paper_literal_vertical", "seed"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      usage("unknown config key '" + key + "'");
    }
  }
  if (!j.contains("schema_version")) usage("missing required field 'schema_version'");
  if (!j.contains("scenario")) usage("missing required field 'scenario'");

  RunConfig cfg;
  cfg.schema_version = field<int>(j, "schema_version", "an integer");
  if (cfg.schema_version != kSchemaVersion) {
    usage("unsupported schema_version " + std::to_string(cfg.schema_version));
  }
  cfg.scenario = field<std::string>(j, "scenario", "a string");
  if (j.contains("params")) {
    if (!j["params"].is_object()) usage("field 'params' must be an object");
    for (const auto& [key, v] : j["params"].items()) cfg.params[key] = param_from_json(key, v);
  }
  if (j.contains("mode")) cfg.mode = field<std::string>(j, "mode", "a string");
  if (j.contains("t_final")) cfg.t_final = field<double>(j, "t_final", "a number");
  if (j.contains("h")) cfg.h = field<double>(j, "h", "a number");
  if (j.contains("tolerances")) {
    if (!j["tolerances"].is_object()) usage("field 'tolerances' must be an object");
    for (const auto& [key, v] : j["tolerances"].items()) {
      if (!v.is_number()) usage("tolerances." + key + " must be a number");
      cfg.tolerances[key] = v.get<double>();
    }
  }
  if (j.contains("out_dir")) cfg.out_dir = field<std::string>(j, "out_dir", "a string");
  if (j.contains("audit")) cfg.audit = field<bool>(j, "audit", "a boolean");
  if (j.contains("paper_literal_vertical")) {
    cfg.paper_literal_vertical = field<bool>(j, "paper_literal_vertical", "a boolean");
  }
  if (j.contains("seed")) cfg.seed = field<std::uint64_t>(j, "seed", "a non-negative integer");
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) usage("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    usage("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json serialize_config(const RunConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["scenario"] = cfg.scenario;
  json params = json::object();
  for (const auto& [k, v] : cfg.params) params[k] = param_to_json(v);
  j["params"] = params;
  j["mode"] = cfg.mode;
  j["t_final"] = cfg.t_final;
  j["h"] = cfg.h;
  json tol = json::object();
  for (const auto& [k, v] : cfg.tolerances) tol[k] = v;
  j["tolerances"] = tol;
  j["out_dir"] = cfg.out_dir;
  j["audit"] = cfg.audit;
  j["paper_literal_vertical"] = cfg.paper_literal_vertical;
  j["seed"] = cfg.seed;
  return j;
}

void validate_config(const RunConfig& cfg) {
  if (!(cfg.t_final > 0.0) || !std::isfinite(cfg.t_final)) usage("t_final must be positive");
  if (!(cfg.h > 0.0) || !std::isfinite(cfg.h)) usage("h must be positive");
  if (cfg.h > cfg.t_final) usage("h must not exceed t_final");
  static const std::vector<std::string> modes = {"full", "reduced", "compare", "eps"};
  if (std::find(modes.begin(), modes.end(), cfg.mode) == modes.end()) {
    usage("mode must be one of full, reduced, compare, eps (got '" + cfg.mode + "')");
  }
  const ScenarioInfo& info = scenario_info(cfg.scenario);
  if (std::find(info.modes.begin(), info.modes.end(), cfg.mode) == info.modes.end()) {
    std::string allowed;
    for (const auto& m : info.modes) allowed += (allowed.empty() ? "" : ", ") + m;
    usage("mode '" + cfg.mode + "' is not available for scenario '" + cfg.scenario +
          "' (available: " + allowed + ")");
  }
  resolve_params(cfg.scenario, cfg.params);
  apply_overrides(cfg.tolerances);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const Eigen::Index n = traj.samples.empty() ? 0 : traj.samples.front().q.size();
  put_header(os, {{"q", n}, {"v", n}, {"p", n}});
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const auto& s = traj.samples[i];
    const auto& d = traj.diagnostics[i];
    put_row(os, s.t, {&s.q, &s.v, &s.p}, {d.energy, d.constraint_residual});
  }
}

void write_reduced_csv(std::ostream& os, const ReducedTrajectory& traj) {
  Eigen::Index r = 0, k = 0;
  if (!traj.samples.empty()) {
    r = traj.samples.front().sigma.size();
    k = traj.samples.front().xi.size();
  }
  put_header(os, {{"sigma", r}, {"u", r}, {"xi", k}, {"y", r}, {"rho", k}});
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const auto& s = traj.samples[i];
    const auto& d = traj.diagnostics[i];
    put_row(os, s.t, {&s.sigma, &s.u, &s.xi, &s.y, &s.rho},
            {d.energy, std::max(d.horizontal_residual, d.vertical_residual)});
  }
}

void write_eps_csv(std::ostream& os, const ReducedTrajectory& traj) {
  const Eigen::Index k = traj.samples.empty() ? 0 : traj.samples.front().xi.size();
  put_header(os, {{"xi", k}, {"mu", k}});
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const auto& s = traj.samples[i];
    const auto& d = traj.diagnostics[i];
    put_row(os, s.t, {&s.xi, &s.rho}, {d.energy, d.vertical_residual});
  }
}

json to_json(const ImpactRecord& r) {
  json j;
  j["t_impact"] = r.t_impact;
  j["q"] = vec_json(r.q);
  j["v_minus"] = vec_json(r.v_minus);
  j["v_plus"] = vec_json(r.v_plus);
  j["p_minus"] = vec_json(r.p_minus);
  j["p_plus"] = vec_json(r.p_plus);
  j["lambda0"] = r.lambda0;
  j["lambda"] = vec_json(r.lambda);
  j["e_minus"] = r.e_minus;
  j["e_plus"] = r.e_plus;
  return j;
}

void write_events_jsonl(std::ostream& os, const std::vector<ImpactRecord>& events) {
  for (const auto& e : events) os << to_json(e).dump() << '\n';
}

void write_reduced_events_jsonl(std::ostream& os, const std::vector<ReducedImpactRecord>& events) {
  for (const auto& r : events) {
    json j;
    j["t_impact"] = r.t_impact;
    j["sigma"] = vec_json(r.sigma);
    j["u_minus"] = vec_json(r.u_minus);
    j["u_plus"] = vec_json(r.u_plus);
    j["xi_minus"] = vec_json(r.xi_minus);
    j["xi_plus"] = vec_json(r.xi_plus);
    j["y_minus"] = vec_json(r.y_minus);
    j["y_plus"] = vec_json(r.y_plus);
    j["rho_minus"] = vec_json(r.rho_minus);
    j["rho_plus"] = vec_json(r.rho_plus);
    j["lambda0"] = r.lambda0;
    j["lambda_h"] = vec_json(r.lambda_h);
    j["lambda_v"] = vec_json(r.lambda_v);
    j["e_minus"] = r.e_minus;
    j["e_plus"] = r.e_plus;
    j["vertical_residual"] = r.vertical_residual;
    os << j.dump() << '\n';
  }
}

json to_json(const AuditReport& rep) {
  json checks = json::array();
  for (const auto& c : rep.checks) {
    json jc;
    jc["name"] = c.name;
    jc["status"] = std::string(to_string(c.status));
    jc["worst"] = number_or_null(c.worst);
    jc["tolerance"] = number_or_null(c.tolerance);
    jc["locations"] = c.locations;
    if (!c.reason.empty()) jc["reason"] = c.reason;
    checks.push_back(std::move(jc));
  }
  return {{"subject", rep.subject}, {"passed", rep.passed()}, {"checks", checks}};
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError(ErrorKind::UsageError, "cannot write '" + path.string() + "'");
  out << content;
}

template <class F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

// Geometry and derivative audits at seeded random samples of a full run.
AuditReport audit_model(const SystemSpec& sys, const Trajectory& traj, std::uint64_t seed,
                        const Tolerances& tol) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, traj.samples.size() - 1);
  std::vector<Vec> points;
  std::vector<std::pair<Vec, Vec>> states;
  for (int i = 0; i < 8; ++i) {
    const auto& s = traj.samples[pick(rng)];
    points.push_back(s.q);
    states.emplace_back(s.q, s.v);
  }
  AuditReport rep;
  rep.subject = "model";
  for (const auto& g : validate_geometry(sys, points).checks) {
    AuditCheck c;
    c.name = "geometry." + g.name;
    c.status = g.passed ? CheckStatus::pass : CheckStatus::fail;
    c.worst = g.worst;
    c.reason = g.detail;
    rep.checks.push_back(std::move(c));
  }
  const FdAuditReport fd = fd_audit(sys.lagrangian, states, tol);
  const std::pair<const char*, double> entries[] = {
      {"fd.dL_dv", fd.dL_dv_error},
      {"fd.dL_dq", fd.dL_dq_error},
      {"fd.d2L_dvdv", fd.d2L_dvdv_error},
      {"fd.d2L_dvdq", fd.d2L_dvdq_error}};
  for (const auto& [name, err] : entries) {
    AuditCheck c;
    c.name = name;
    c.worst = err;
    c.tolerance = tol.fd_derivative;
    if (err > tol.fd_derivative) c.status = CheckStatus::fail;
    rep.checks.push_back(std::move(c));
  }
  return rep;
}

std::string summarize(const AuditReport& rep) {
  std::string failed;
  for (const auto& c : rep.checks) {
    if (c.status == CheckStatus::fail) failed += (failed.empty() ? "" : ",") + c.name;
  }
  return rep.subject + ": " + (failed.empty() ? "pass" : "FAIL [" + failed + "]");
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& log) {
  try {
    validate_config(cfg);
  } catch (const SimError& e) {
    log << "[config] error: " << e.what() << '\n';
    return 2;
  }

  const Tolerances tol = apply_overrides(cfg.tolerances);
  Scenario sc;
  try {
    sc = build(cfg.scenario, cfg.params);
  } catch (const SimError& e) {
    log << "[build] error: " << e.what() << '\n';
    return 2;
  }

  namespace fs = std::filesystem;
  const fs::path out(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    log << "[write] error: cannot create '" << cfg.out_dir << "': " << ec.message() << '\n';
    return 2;
  }

  IntegratorOptions opts;
  opts.h = cfg.h;
  opts.constraint_tol = tol.constraint;
  opts.legendre_tol = tol.legendre;

  json report;
  report["config"] = serialize_config(cfg);
  report["scenario"] = {{"name", sc.info.name}, {"from_paper", sc.info.from_paper}};
  json params = json::object();
  for (const auto& [k, v] : sc.params) params[k] = param_to_json(v);
  report["scenario"]["params"] = params;
  report["audits"] = json::array();

  std::vector<AuditReport> audits;
  std::string error;
  try {
    if (cfg.mode == "full" || cfg.mode == "compare") {
      SystemSpec sys = *sc.full;
      sys.tol = tol;
      if (cfg.mode == "compare") sys.guard = sc.full_guard;
      const Trajectory traj = integrate(sys, *sc.full_initial, cfg.t_final, opts);
      log << "[integrate] " << sys.name << ": " << traj.samples.size() << " samples, "
          << traj.events.size() << " impacts, " << traj.grazes.size() << " grazes\n";
      write_file(out / "trajectory.csv", render([&](std::ostream& os) {
                   write_trajectory_csv(os, traj);
                 }));
      write_file(out / "events.jsonl", render([&](std::ostream& os) {
                   write_events_jsonl(os, traj.events);
                 }));
      report["summary"] = {{"samples", traj.samples.size()},
                           {"impacts", traj.events.size()},
                           {"grazes", traj.grazes}};
      if (cfg.audit) {
        audits.push_back(audit_trajectory(sys, traj, tol));
        audits.push_back(audit_model(sys, traj, cfg.seed, tol));
      }
      if (cfg.mode == "compare") {
        ReducedSystemSpec red = *sc.reduced;
        red.tol = tol;
        if (cfg.paper_literal_vertical) red.vertical = VerticalMode::paper_literal;
        const ReducedTrajectory rtraj =
            integrate_reduced(red, *sc.reduced_initial, cfg.t_final, opts);
        log << "[integrate] " << red.name << ": " << rtraj.samples.size() << " samples, "
            << rtraj.events.size() << " impacts\n";
        write_file(out / "trajectory_reduced.csv", render([&](std::ostream& os) {
                     write_reduced_csv(os, rtraj);
                   }));
        const AuditReport eq = audit_equivalence(traj, rtraj, *sc.layout, red, tol);
        write_file(out / "equivalence.json", to_json(eq).dump(2) + "\n");
        audits.push_back(eq);
        if (cfg.audit) audits.push_back(audit_reduced_trajectory(red, rtraj, tol));
      }
    } else if (cfg.mode == "reduced") {
      ReducedSystemSpec red = *sc.reduced;
      red.tol = tol;
      if (cfg.paper_literal_vertical) red.vertical = VerticalMode::paper_literal;
      const ReducedTrajectory rtraj = integrate_reduced(red, *sc.reduced_initial, cfg.t_final, opts);
      log << "[integrate] " << red.name << ": " << rtraj.samples.size() << " samples, "
          << rtraj.events.size() << " impacts\n";
      write_file(out / "trajectory_reduced.csv", render([&](std::ostream& os) {
                   write_reduced_csv(os, rtraj);
                 }));
      write_file(out / "events.jsonl", render([&](std::ostream& os) {
                   write_reduced_events_jsonl(os, rtraj.events);
                 }));
      report["summary"] = {{"samples", rtraj.samples.size()}, {"impacts", rtraj.events.size()}};
      if (cfg.audit) audits.push_back(audit_reduced_trajectory(red, rtraj, tol));
    } else {
      EpsSystem eps = *sc.eps;
      eps.tol = tol;
      const ReducedSystemSpec red = as_reduced(eps);
      ReducedState s0;
      s0.sigma = s0.u = s0.y = Vec(0);
      s0.xi = *sc.eps_initial;
      s0.rho = eps.dell_dxi(s0.xi);
      const ReducedTrajectory rtraj = integrate_reduced(red, s0, cfg.t_final, opts);
      log << "[integrate] eps: " << rtraj.samples.size() << " samples\n";
      write_file(out / "trajectory_eps.csv", render([&](std::ostream& os) {
                   write_eps_csv(os, rtraj);
                 }));
      report["summary"] = {{"samples", rtraj.samples.size()}};
      if (cfg.audit) audits.push_back(audit_eps(eps, rtraj, tol));
    }
  } catch (const SimError& e) {
    error = e.what();
    log << "[integrate] error: " << error << '\n';
  }

  bool passed = error.empty();
  for (const auto& a : audits) {
    report["audits"].push_back(to_json(a));
    log << "[audit] " << summarize(a) << '\n';
    passed = passed && a.passed();
  }
  if (!error.empty()) report["error"] = error;
  report["passed"] = passed;
  write_file(out / "report.json", report.dump(2) + "\n");
  log << "[write] " << cfg.out_dir << ": " << (passed ? "pass" : "FAIL") << '\n';
  return passed ? 0 : 1;
}

}  // namespace nsnh
