#include <charconv>
#include "nsnh/scenarios.hpp"

#include <cmath>
#include <numbers>

#include "nsnh/log.hpp"

namespace nsnh {

namespace {

using Bound = ParamSchema::Bound;

std::vector<ScenarioInfo> make_registry() {
  std::vector<ScenarioInfo> reg;

  reg.push_back({"rolling_disk",
                 "vertical disk rolling without slipping; rim point confined to the unit circle",
                 true,
                 {"full"},
                 {{"m", 1.0, "mass", Bound::positive, {}},
                  {"I", 1.0, "inertia about the axle", Bound::positive, {}},
                  {"J", 1.0, "inertia about the vertical", Bound::positive, {}},
                  {"R", 0.2, "disk radius", Bound::positive, {}},
                  {"x0", 0.0, "initial x", Bound::none, {}},
                  {"y0", 0.0, "initial y", Bound::none, {}},
                  {"theta0", 0.0, "initial rolling angle", Bound::none, {}},
                  {"phi0", 0.0, "initial heading", Bound::none, {}},
                  {"vtheta0", 4.0, "initial rolling rate", Bound::none, {}},
                  {"vphi0", 1.0, "initial turning rate", Bound::none, {}}}});

  reg.push_back({"spherical_pendulum",
                 "spherical pendulum with v_phi = f(theta) v_theta inside the wall L sin(theta) <= 1",
                 true,
                 {"full", "compare"},
                 {{"m", 1.0, "bob mass", Bound::positive, {}},
                  {"L", 1.5, "rod length (> 1 for the wall to be reachable)", Bound::positive, {}},
                  {"g", 9.8, "gravity", Bound::positive, {}},
                  {"eps", 0.5, "f(theta) = 1 + eps sin^2(theta)", Bound::above_minus_one, {}},
                  {"theta0", 2.7, "initial polar angle (0 = top)", Bound::none, {}},
                  {"phi0", 0.0, "initial azimuth", Bound::none, {}},
                  {"vtheta0", -2.0, "initial polar rate", Bound::none, {}},
                  {"constrained", true, "impose v_phi = f(theta) v_theta", Bound::none, {}},
                  {"reduction", std::string("trivial"),
                   "connection used by compare mode",
                   Bound::none,
                   {"trivial", "adapted"}}}});

  reg.push_back({"reduced_pendulum",
                 "SO(2)-reduced spherical pendulum on the shape angle theta",
                 true,
                 {"reduced"},
                 {{"m", 1.0, "bob mass", Bound::positive, {}},
                  {"L", 1.5, "rod length", Bound::positive, {}},
                  {"g", 9.8, "gravity", Bound::positive, {}},
                  {"eps", 0.5, "f(theta) = 1 + eps sin^2(theta), used for initial data",
                   Bound::above_minus_one, {}},
                  {"theta0", 2.7, "initial polar angle", Bound::none, {}},
                  {"vtheta0", -2.0, "initial polar rate", Bound::none, {}},
                  {"connection", std::string("trivial"),
                   "trivial: A = 0, no reduced constraints; adapted: A = f, xi = 0",
                   Bound::none,
                   {"trivial", "adapted"}}}});

  reg.push_back({"free_billiard",
                 "free particle in the unit disk (oracle fixture)",
                 false,
                 {"full"},
                 {{"m", 1.0, "mass", Bound::positive, {}},
                  {"x0", 0.0, "initial x", Bound::none, {}},
                  {"y0", 0.0, "initial y", Bound::none, {}},
                  {"vx0", 1.0, "initial x velocity", Bound::none, {}},
                  {"vy0", 0.5, "initial y velocity", Bound::none, {}}}});

  reg.push_back({"rigid_body_suslov",
                 "rigid body on so(3), optionally with the Suslov constraint xi3 = 0 (invented fixture)",
                 false,
                 {"eps"},
                 {{"I1", 1.0, "inertia I11", Bound::positive, {}},
                  {"I2", 2.0, "inertia I22", Bound::positive, {}},
                  {"I3", 3.0, "inertia I33", Bound::positive, {}},
                  {"I13", 0.5, "product of inertia I13", Bound::none, {}},
                  {"constrained", true, "impose xi3 = 0", Bound::none, {}},
                  {"xi1_0", 1.0, "initial xi1", Bound::none, {}},
                  {"xi2_0", 0.5, "initial xi2", Bound::none, {}},
                  {"xi3_0", 0.0, "initial xi3", Bound::none, {}}}});
  return reg;
}

const char* type_name(const ParamValue& v) {
  switch (v.index()) {
    case 0: return "number";
    case 1: return "boolean";
    default: return "string";
  }
}

bool near_pole(double theta, double guard) {
  const double s = std::remainder(theta, std::numbers::pi);
  return std::abs(s) < guard;
}

std::function<void(const Vec&)> make_angle_guard(int index, double guard) {
  return [index, guard](const Vec& q) {
    if (near_pole(q(index), guard)) {
      throw SimError(ErrorKind::InvalidState,
                     "trajectory reached theta = " + std::to_string(q(index)) +
                         ", within the angle guard of a non-free orbit");
    }
  };
}

// ---------------------------------------------------------------- pendulum

struct PendulumParams {
  double m, L, g, eps;
  double f(double th) const { return 1.0 + eps * std::sin(th) * std::sin(th); }
  double df(double th) const { return 2.0 * eps * std::sin(th) * std::cos(th); }
  double mL2() const { return m * L * L; }
};

BoundarySpec pendulum_wall(double L) {
  return {[L](const Vec& q) { return L * std::sin(q(0)) - 1.0; },
          [L](const Vec& q) {
            Vec d = Vec::Zero(q.size());
            d(0) = L * std::cos(q(0));
            return d;
          }};
}

SystemSpec pendulum_system(const PendulumParams& P, bool constrained) {
  SystemSpec sys;
  sys.name = "spherical_pendulum";
  sys.chart = {2, {"theta", "phi"}, {true, true}};
  const double mL2 = P.mL2();
  const double mgL = P.m * P.g * P.L;
  auto& lag = sys.lagrangian;
  lag.L = [=](const Vec& q, const Vec& v) {
    const double s = std::sin(q(0));
    return 0.5 * mL2 * (v(0) * v(0) + s * s * v(1) * v(1)) - mgL * std::cos(q(0));
  };
  lag.dL_dv = [=](const Vec& q, const Vec& v) {
    const double s = std::sin(q(0));
    return Vec{{mL2 * v(0), mL2 * s * s * v(1)}};
  };
  lag.dL_dq = [=](const Vec& q, const Vec& v) {
    const double s = std::sin(q(0)), c = std::cos(q(0));
    return Vec{{mL2 * s * c * v(1) * v(1) + mgL * s, 0.0}};
  };
  lag.d2L_dvdv = [=](const Vec& q, const Vec&) {
    const double s = std::sin(q(0));
    Mat M = Mat::Zero(2, 2);
    M(0, 0) = mL2;
    M(1, 1) = mL2 * s * s;
    return M;
  };
  lag.d2L_dvdq = [=](const Vec& q, const Vec& v) {
    const double s = std::sin(q(0)), c = std::cos(q(0));
    Mat D = Mat::Zero(2, 2);
    D(1, 0) = 2.0 * mL2 * s * c * v(1);
    return D;
  };
  if (constrained) {
    sys.distribution.m = 1;
    sys.distribution.mu = [P](const Vec& q) {
      Mat mu(1, 2);
      mu << P.f(q(0)), -1.0;
      return mu;
    };
    sys.distribution.dmu = [P](const Vec& q) {
      Mat d = Mat::Zero(2, 2);
      d(0, 0) = P.df(q(0));
      return Tensor3{d};
    };
  }
  sys.boundary = pendulum_wall(P.L);
  return sys;
}

ReducedSystemSpec reduced_pendulum_system(const PendulumParams& P, bool adapted) {
  ReducedSystemSpec spec;
  spec.name = "reduced_pendulum";
  spec.r = 1;
  spec.algebra = abelian_algebra(1);
  const double mL2 = P.mL2();
  const double mgL = P.m * P.g * P.L;
  auto& lag = spec.lag;
  if (!adapted) {
    lag.ell = [=](const Vec& sg, const Vec& u, const Vec& xi) {
      const double s = std::sin(sg(0));
      return 0.5 * mL2 * (u(0) * u(0) + s * s * xi(0) * xi(0)) - mgL * std::cos(sg(0));
    };
    lag.dell_dsigma = [=](const Vec& sg, const Vec&, const Vec& xi) {
      const double s = std::sin(sg(0)), c = std::cos(sg(0));
      return Vec{{mL2 * s * c * xi(0) * xi(0) + mgL * s}};
    };
    lag.dell_du = [=](const Vec&, const Vec& u, const Vec&) { return Vec{{mL2 * u(0)}}; };
    lag.dell_dxi = [=](const Vec& sg, const Vec&, const Vec& xi) {
      const double s = std::sin(sg(0));
      return Vec{{mL2 * s * s * xi(0)}};
    };
    lag.d2ell_dw2 = [=](const Vec& sg, const Vec&, const Vec&) {
      const double s = std::sin(sg(0));
      Mat H = Mat::Zero(2, 2);
      H(0, 0) = mL2;
      H(1, 1) = mL2 * s * s;
      return H;
    };
    lag.d2ell_dwdsigma = [=](const Vec& sg, const Vec&, const Vec& xi) {
      const double s = std::sin(sg(0)), c = std::cos(sg(0));
      Mat D = Mat::Zero(2, 1);
      D(1, 0) = 2.0 * mL2 * s * c * xi(0);
      return D;
    };
  } else {
    // ℓ(θ, u, ξ) = L(θ, u, ξ + f(θ) u): the constraint distribution is horizontal.
    lag.ell = [=](const Vec& sg, const Vec& u, const Vec& xi) {
      const double s = std::sin(sg(0));
      const double vphi = xi(0) + P.f(sg(0)) * u(0);
      return 0.5 * mL2 * (u(0) * u(0) + s * s * vphi * vphi) - mgL * std::cos(sg(0));
    };
    lag.dell_dsigma = [=](const Vec& sg, const Vec& u, const Vec& xi) {
      const double s = std::sin(sg(0)), c = std::cos(sg(0));
      const double vphi = xi(0) + P.f(sg(0)) * u(0);
      return Vec{{mL2 * (s * c * vphi * vphi + s * s * vphi * P.df(sg(0)) * u(0)) + mgL * s}};
    };
    lag.dell_du = [=](const Vec& sg, const Vec& u, const Vec& xi) {
      const double s = std::sin(sg(0));
      const double f = P.f(sg(0));
      return Vec{{mL2 * (u(0) + s * s * (xi(0) + f * u(0)) * f)}};
    };
    lag.dell_dxi = [=](const Vec& sg, const Vec& u, const Vec& xi) {
      const double s = std::sin(sg(0));
      return Vec{{mL2 * s * s * (xi(0) + P.f(sg(0)) * u(0))}};
    };
    lag.d2ell_dw2 = [=](const Vec& sg, const Vec&, const Vec&) {
      const double s2 = std::sin(sg(0)) * std::sin(sg(0));
      const double f = P.f(sg(0));
      Mat H(2, 2);
      H << mL2 * (1.0 + s2 * f * f), mL2 * s2 * f,  //
          mL2 * s2 * f, mL2 * s2;
      return H;
    };
    spec.A = [P](const Vec& sg) { return Mat::Constant(1, 1, P.f(sg(0))); };
    spec.B = [](const Vec&) { return Tensor3{Mat::Zero(1, 1)}; };
    spec.delta_gtilde.m = 1;
    spec.delta_gtilde.cols = 1;
    spec.delta_gtilde.mu = [](const Vec&) { return Mat::Ones(1, 1); };
    spec.delta_gtilde.dmu = [](const Vec&) { return Tensor3{Mat::Zero(1, 1)}; };
  }
  spec.boundary = pendulum_wall(P.L);
  return spec;
}

PendulumParams pendulum_params(const Scenario& sc) {
  PendulumParams P{sc.param("m"), sc.param("L"), sc.param("g"), sc.param("eps")};
  if (P.L <= 1.0) {
    log::warn("pendulum length L = {} <= 1: the wall L sin(theta) = 1 is unreachable", P.L);
  }
  const double theta0 = sc.param("theta0");
  if (near_pole(theta0, default_tolerances().angle_guard)) {
    throw SimError(ErrorKind::InvalidParams,
                   "theta0 is within the angle guard of theta = k pi (non-free orbit)");
  }
  if (P.L * std::sin(theta0) - 1.0 >= 0.0) {
    throw SimError(ErrorKind::InvalidParams, "theta0 lies outside the wall L sin(theta) < 1");
  }
  return P;
}

void build_spherical_pendulum(Scenario& sc) {
  const PendulumParams P = pendulum_params(sc);
  const bool constrained = sc.flag("constrained");
  const bool adapted = sc.choice("reduction") == "adapted";
  if (adapted && !constrained) {
    throw SimError(ErrorKind::InvalidParams,
                   "the adapted reduction only applies to the constrained pendulum");
  }
  sc.full = pendulum_system(P, constrained);
  const double th0 = sc.param("theta0");
  const double vth0 = sc.param("vtheta0");
  const double vphi0 = P.f(th0) * vth0;
  PontryaginState s0;
  s0.q = Vec{{th0, sc.param("phi0")}};
  s0.v = Vec{{vth0, vphi0}};
  s0.p = sc.full->lagrangian.dL_dv(s0.q, s0.v);
  sc.full_initial = s0;

  sc.reduced = reduced_pendulum_system(P, adapted);
  sc.reduced->guard = make_angle_guard(0, sc.reduced->tol.angle_guard);
  sc.full_guard = make_angle_guard(0, sc.full->tol.angle_guard);
  BundleLayout layout{{0}, {1}, {}};
  if (adapted) layout.A = sc.reduced->A;
  sc.layout = layout;
  sc.reduced_initial = reduce_state(layout, s0);
}

void build_reduced_pendulum(Scenario& sc) {
  const PendulumParams P = pendulum_params(sc);
  const bool adapted = sc.choice("connection") == "adapted";
  sc.reduced = reduced_pendulum_system(P, adapted);
  sc.reduced->guard = make_angle_guard(0, sc.reduced->tol.angle_guard);
  const double th0 = sc.param("theta0");
  const double u0 = sc.param("vtheta0");
  ReducedState s;
  s.sigma = Vec{{th0}};
  s.u = Vec{{u0}};
  // Matches the full pendulum started with v_phi = f(theta0) v_theta.
  s.xi = Vec{{adapted ? 0.0 : P.f(th0) * u0}};
  s.y = sc.reduced->lag.dell_du(s.sigma, s.u, s.xi);
  s.rho = sc.reduced->lag.dell_dxi(s.sigma, s.u, s.xi);
  sc.reduced_initial = s;
}

// ------------------------------------------------------------ rolling disk

void build_rolling_disk(Scenario& sc) {
  const double m = sc.param("m"), I = sc.param("I"), J = sc.param("J"), R = sc.param("R");
  SystemSpec sys;
  sys.name = "rolling_disk";
  sys.chart = {4, {"x", "y", "theta", "phi"}, {false, false, true, true}};
  const Vec masses{{m, m, I, J}};
  auto& lag = sys.lagrangian;
  lag.L = [masses](const Vec&, const Vec& v) {
    return 0.5 * v.dot(masses.cwiseProduct(v));
  };
  lag.dL_dv = [masses](const Vec&, const Vec& v) -> Vec { return masses.cwiseProduct(v); };
  lag.dL_dq = [](const Vec& q, const Vec&) -> Vec { return Vec::Zero(q.size()); };
  lag.d2L_dvdv = [masses](const Vec&, const Vec&) -> Mat { return masses.asDiagonal(); };
  lag.d2L_dvdq = [](const Vec& q, const Vec&) -> Mat { return Mat::Zero(q.size(), q.size()); };

  sys.distribution.m = 2;
  sys.distribution.mu = [R](const Vec& q) {
    const double c = std::cos(q(3)), s = std::sin(q(3));
    Mat mu(2, 4);
    mu << 1.0, 0.0, -R * c, 0.0,  //
        0.0, 1.0, -R * s, 0.0;
    return mu;
  };
  sys.distribution.dmu = [R](const Vec& q) {
    const double c = std::cos(q(3)), s = std::sin(q(3));
    Tensor3 d(2, Mat::Zero(4, 4));
    d[0](2, 3) = R * s;
    d[1](2, 3) = -R * c;
    return d;
  };
  sys.boundary = BoundarySpec{
      [R](const Vec& q) {
        const double X = q(0) + R * std::cos(q(3)), Y = q(1) + R * std::sin(q(3));
        return X * X + Y * Y - 1.0;
      },
      [R](const Vec& q) {
        const double c = std::cos(q(3)), s = std::sin(q(3));
        const double X = q(0) + R * c, Y = q(1) + R * s;
        return Vec{{2.0 * X, 2.0 * Y, 0.0, 2.0 * R * (-q(0) * s + q(1) * c)}};
      }};
  sc.full = std::move(sys);

  const double phi0 = sc.param("phi0"), vth = sc.param("vtheta0");
  PontryaginState s0;
  s0.q = Vec{{sc.param("x0"), sc.param("y0"), sc.param("theta0"), phi0}};
  s0.v = Vec{{R * std::cos(phi0) * vth, R * std::sin(phi0) * vth, vth, sc.param("vphi0")}};
  if (sc.full->boundary->b(s0.q) >= 0.0) {
    throw SimError(ErrorKind::InvalidParams, "initial rim point lies outside the unit circle");
  }
  s0.p = sc.full->lagrangian.dL_dv(s0.q, s0.v);
  sc.full_initial = s0;
}

// ----------------------------------------------------------- free billiard

void build_free_billiard(Scenario& sc) {
  const double m = sc.param("m");
  SystemSpec sys;
  sys.name = "free_billiard";
  sys.chart = {2, {"x", "y"}, {false, false}};
  auto& lag = sys.lagrangian;
  lag.L = [m](const Vec&, const Vec& v) { return 0.5 * m * v.squaredNorm(); };
  lag.dL_dv = [m](const Vec&, const Vec& v) -> Vec { return m * v; };
  lag.dL_dq = [](const Vec& q, const Vec&) -> Vec { return Vec::Zero(q.size()); };
  lag.d2L_dvdv = [m](const Vec& q, const Vec&) -> Mat {
    return m * Mat::Identity(q.size(), q.size());
  };
  lag.d2L_dvdq = [](const Vec& q, const Vec&) -> Mat { return Mat::Zero(q.size(), q.size()); };
  sys.boundary = BoundarySpec{[](const Vec& q) { return q.squaredNorm() - 1.0; },
                              [](const Vec& q) -> Vec { return 2.0 * q; }};
  sc.full = std::move(sys);

  PontryaginState s0;
  s0.q = Vec{{sc.param("x0"), sc.param("y0")}};
  s0.v = Vec{{sc.param("vx0"), sc.param("vy0")}};
  if (s0.q.squaredNorm() >= 1.0) {
    throw SimError(ErrorKind::InvalidParams, "initial position must lie inside the unit disk");
  }
  s0.p = m * s0.v;
  sc.full_initial = s0;
}

// ------------------------------------------------------- rigid body/Suslov

void build_rigid_body(Scenario& sc) {
  Mat I(3, 3);
  I << sc.param("I1"), 0.0, sc.param("I13"),  //
      0.0, sc.param("I2"), 0.0,               //
      sc.param("I13"), 0.0, sc.param("I3");
  if (Eigen::LLT<Mat>(I).info() != Eigen::Success) {
    throw SimError(ErrorKind::InvalidParams, "inertia tensor must be positive definite");
  }
  EpsSystem eps;
  eps.algebra = so3();
  eps.ell = [I](const Vec& xi) { return 0.5 * xi.dot(I * xi); };
  eps.dell_dxi = [I](const Vec& xi) -> Vec { return I * xi; };
  eps.d2ell_dxi2 = [I](const Vec&) -> Mat { return I; };
  const bool constrained = sc.flag("constrained");
  eps.d_annihilator = constrained ? Mat(Mat::Identity(3, 3).row(2)) : Mat(0, 3);
  Vec xi0{{sc.param("xi1_0"), sc.param("xi2_0"), sc.param("xi3_0")}};
  if (constrained && xi0(2) != 0.0) {
    throw SimError(ErrorKind::InvalidParams, "Suslov constraint requires xi3_0 = 0");
  }
  sc.eps = std::move(eps);
  sc.eps_initial = xi0;
}

}  // namespace

double Scenario::param(const std::string& key) const {
  return std::get<double>(params.at(key));
}
bool Scenario::flag(const std::string& key) const { return std::get<bool>(params.at(key)); }
const std::string& Scenario::choice(const std::string& key) const {
  return std::get<std::string>(params.at(key));
}

const std::vector<ScenarioInfo>& list_scenarios() {
  static const std::vector<ScenarioInfo> reg = make_registry();
  return reg;
}

const ScenarioInfo& scenario_info(const std::string& name) {
  for (const auto& info : list_scenarios()) {
    if (info.name == name) return info;
  }
  throw SimError(ErrorKind::UnknownScenario, "unknown scenario '" + name + "'");
}

Params resolve_params(const std::string& name, const Params& overrides) {
  const ScenarioInfo& info = scenario_info(name);
  Params out;
  for (const auto& p : info.params) out[p.name] = p.default_value;
  for (const auto& [key, value] : overrides) {
    const auto it = std::find_if(info.params.begin(), info.params.end(),
                                 [&](const ParamSchema& s) { return s.name == key; });
    if (it == info.params.end()) {
      throw SimError(ErrorKind::InvalidParams,
                     "scenario '" + name + "' has no parameter '" + key + "'");
    }
    if (value.index() != it->default_value.index()) {
      throw SimError(ErrorKind::InvalidParams, "parameter '" + key + "' must be a " +
                                                   type_name(it->default_value));
    }
    if (const double* d = std::get_if<double>(&value)) {
      if (!std::isfinite(*d)) {
        throw SimError(ErrorKind::InvalidParams, "parameter '" + key + "' must be finite");
      }
      if (it->bound == Bound::positive && !(*d > 0.0)) {
        throw SimError(ErrorKind::InvalidParams, "parameter '" + key + "' must be positive");
      }
      if (it->bound == Bound::above_minus_one && !(*d > -1.0)) {
        throw SimError(ErrorKind::InvalidParams, "parameter '" + key + "' must exceed -1");
      }
    }
    if (const std::string* s = std::get_if<std::string>(&value)) {
      if (std::find(it->choices.begin(), it->choices.end(), *s) == it->choices.end()) {
        throw SimError(ErrorKind::InvalidParams,
                       "parameter '" + key + "' has unsupported value '" + *s + "'");
      }
    }
    out[key] = value;
  }
  return out;
}

Scenario build(const std::string& name, const Params& overrides) {
  Scenario sc;
  sc.info = scenario_info(name);
  sc.params = resolve_params(name, overrides);
  if (name == "rolling_disk") {
    build_rolling_disk(sc);
  } else if (name == "spherical_pendulum") {
    build_spherical_pendulum(sc);
  } else if (name == "reduced_pendulum") {
    build_reduced_pendulum(sc);
  } else if (name == "free_billiard") {
    build_free_billiard(sc);
  } else {
    build_rigid_body(sc);
  }
  return sc;
}

std::string to_string(const ParamValue& v) {
  if (const double* d = std::get_if<double>(&v)) {
    char buf[32];  // shortest text that parses back to the same double
    const auto res = std::to_chars(buf, buf + sizeof buf, *d);
    return std::string(buf, res.ptr);
  }
  if (const bool* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  return std::get<std::string>(v);
}

}  // namespace nsnh
