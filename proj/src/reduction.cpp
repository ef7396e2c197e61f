#include "nsnh/reduction.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "nsnh/hybrid.hpp"
#include "nsnh/linalg.hpp"

namespace nsnh {

Mat ReducedSystemSpec::connection(const Vec& sigma) const {
  if (A) return A(sigma);
  return Mat::Zero(k(), r);
}

Tensor3 ReducedSystemSpec::curvature(const Vec& sigma) const {
  if (B) return B(sigma);
  return Tensor3(k(), Mat::Zero(r, r));
}

Vec ReducedSystemSpec::momentum(const Vec& sigma, const Vec& u, const Vec& xi) const {
  Vec out(r + k());
  out << lag.dell_du(sigma, u, xi), lag.dell_dxi(sigma, u, xi);
  return out;
}

Mat ReducedSystemSpec::hessian(const Vec& sigma, const Vec& u, const Vec& xi) const {
  if (lag.d2ell_dw2) return lag.d2ell_dw2(sigma, u, xi);
  Vec w(r + k());
  w << u, xi;
  const Mat H = linalg::fd_jacobian(
      [&](const Vec& x) { return momentum(sigma, x.head(r), x.tail(k())); }, w);
  return 0.5 * (H + H.transpose());
}

Mat ReducedSystemSpec::mixed(const Vec& sigma, const Vec& u, const Vec& xi) const {
  if (lag.d2ell_dwdsigma) return lag.d2ell_dwdsigma(sigma, u, xi);
  if (r == 0) return Mat(k(), 0);
  return linalg::fd_jacobian([&](const Vec& s) { return momentum(s, u, xi); }, sigma);
}

void validate_reduced(const ReducedSystemSpec& spec, const std::vector<Vec>& sigma_samples) {
  validate_algebra(spec.algebra);
  if (spec.r < 0) throw SimError(ErrorKind::InvalidParams, "shape dimension must be >= 0");
  if (spec.delta_gtilde.m > 0 && spec.delta_gtilde.cols != spec.k()) {
    throw SimError(ErrorKind::InvalidParams, "vertical constraint rows must have width k");
  }
  for (const Vec& s : sigma_samples) {
    const Tensor3 B = spec.curvature(s);
    double asym = 0.0, size = 0.0;
    for (const Mat& Ba : B) {
      asym = std::max(asym, (Ba + Ba.transpose()).cwiseAbs().maxCoeff());
      size = std::max(size, Ba.cwiseAbs().maxCoeff());
    }
    if (asym > 1e-12) {
      throw SimError(ErrorKind::InvalidParams, "curvature is not antisymmetric");
    }
    if (!spec.A && size > 0.0) {
      throw SimError(ErrorKind::InvalidParams, "trivial connection with nonzero curvature");
    }
  }
}

double reduced_energy(const ReducedSystemSpec& spec, const Vec& sigma, const Vec& u,
                      const Vec& xi, const Vec& y, const Vec& rho) {
  return y.dot(u) + rho.dot(xi) - spec.lag.ell(sigma, u, xi);
}

namespace {

Mat block_constraints(const Mat& Dh, const Mat& Dv, int r, int k) {
  Mat C = Mat::Zero(Dh.rows() + Dv.rows(), r + k);
  if (Dh.rows() > 0) C.topLeftCorner(Dh.rows(), r) = Dh;
  if (Dv.rows() > 0) C.bottomRightCorner(Dv.rows(), k) = Dv;
  return C;
}

bool literal(const ReducedSystemSpec& spec) { return spec.vertical == VerticalMode::paper_literal; }

}  // namespace

LpRate lp_rhs(const ReducedSystemSpec& spec, const Vec& sigma, const Vec& u, const Vec& xi) {
  const int r = spec.r;
  const int k = spec.k();
  const Mat A = spec.connection(sigma);
  const Tensor3 B = spec.curvature(sigma);
  const Vec rho = spec.lag.dell_dxi(sigma, u, xi);

  Vec fh = spec.lag.dell_dsigma(sigma, u, xi);
  for (int a = 0; a < k; ++a) {
    if (rho(a) == 0.0) continue;
    fh -= rho(a) * (B[a].transpose() * u);
  }
  const Vec fv = ad_star(spec.algebra, xi, rho, spec.coadjoint_sign) -
                 ad_star(spec.algebra, A * u, rho, spec.coadjoint_sign);

  Vec F(r + k);
  F << fh, fv;
  F -= spec.mixed(sigma, u, xi) * u;

  const Mat Dh = spec.delta_sigma.rows(sigma);
  const Mat Dv = spec.delta_gtilde.rows(sigma);
  const Vec gh = -spec.delta_sigma.quadratic_term(sigma, u);
  const Vec gv = -spec.delta_gtilde.rate_term(sigma, u, xi);
  const Mat H = spec.hessian(sigma, u, xi);

  LpRate out;
  if (!literal(spec)) {
    const Mat C = block_constraints(Dh, Dv, r, k);
    Vec g(C.rows());
    g << gh, gv;
    const auto sol = linalg::solve_saddle(H, C, F, g, spec.tol.kkt_residual);
    out.udot = sol.x.head(r);
    out.xidot = sol.x.tail(k);
    out.lambda_h = sol.lambda.head(Dh.rows());
    out.lambda_v = sol.lambda.tail(Dv.rows());
    return out;
  }
  const Mat C = block_constraints(Dh, Mat(0, k), r, k);
  const auto sol = linalg::solve_saddle(H, C, F, gh, spec.tol.kkt_residual);
  out.udot = sol.x.head(r);
  out.xidot = sol.x.tail(k);
  out.lambda_h = sol.lambda;
  out.lambda_v = Vec::Zero(Dv.rows());
  if (Dv.rows() > 0) out.vertical_residual = inf_norm(Dv * out.xidot - gv);
  return out;
}

ReducedSystemSpec as_reduced(const EpsSystem& eps) {
  ReducedSystemSpec spec;
  spec.name = "eps";
  spec.r = 0;
  spec.algebra = eps.algebra;
  spec.coadjoint_sign = eps.coadjoint_sign;
  spec.tol = eps.tol;
  const int k = eps.algebra.k;
  spec.lag.ell = [f = eps.ell](const Vec&, const Vec&, const Vec& xi) { return f(xi); };
  spec.lag.dell_dsigma = [](const Vec&, const Vec&, const Vec&) { return Vec(0); };
  spec.lag.dell_du = [](const Vec&, const Vec&, const Vec&) { return Vec(0); };
  spec.lag.dell_dxi = [f = eps.dell_dxi](const Vec&, const Vec&, const Vec& xi) { return f(xi); };
  if (eps.d2ell_dxi2) {
    spec.lag.d2ell_dw2 = [f = eps.d2ell_dxi2](const Vec&, const Vec&, const Vec& xi) {
      return f(xi);
    };
  }
  spec.lag.d2ell_dwdsigma = [k](const Vec&, const Vec&, const Vec&) { return Mat(k, 0); };
  const Mat d = eps.d_annihilator;
  spec.delta_gtilde.m = static_cast<int>(d.rows());
  spec.delta_gtilde.cols = k;
  spec.delta_gtilde.mu = [d](const Vec&) { return d; };
  spec.delta_gtilde.dmu = [m = d.rows(), k](const Vec&) {
    return Tensor3(static_cast<std::size_t>(m), Mat(k, 0));
  };
  return spec;
}

EpsRate eps_rhs(const EpsSystem& eps, const Vec& xi) {
  const ReducedSystemSpec spec = as_reduced(eps);
  LpRate rate = lp_rhs(spec, Vec(0), Vec(0), xi);
  return {std::move(rate.xidot), std::move(rate.lambda_v)};
}

ReducedImpactRecord reduced_impact_map(const ReducedSystemSpec& spec, const Vec& sigma,
                                       const Vec& u_minus, const Vec& xi_minus, double t,
                                       const ImpactOptions& opts) {
  if (!spec.boundary) throw SimError(ErrorKind::InvalidState, "reduced system has no boundary");
  const int r = spec.r;
  const int k = spec.k();
  const double bval = spec.boundary->b(sigma);
  if (std::abs(bval) > spec.tol.boundary) {
    throw SimError(ErrorKind::NotOnBoundary, "|b(sigma)| = " + std::to_string(std::abs(bval)));
  }
  const Vec db = spec.boundary->db(sigma);
  if (db.norm() <= spec.tol.rank) {
    throw SimError(ErrorKind::DegenerateContact, "db(sigma) vanishes at the impact point");
  }
  if (db.dot(u_minus) <= 0.0) {
    throw SimError(ErrorKind::InvalidState, "shape velocity is not approaching the boundary");
  }
  const Mat Dh = spec.delta_sigma.rows(sigma);
  const Mat Dv = spec.delta_gtilde.rows(sigma);
  const Mat C = block_constraints(Dh, literal(spec) ? Mat(0, k) : Dv, r, k);

  Vec w_minus(r + k);
  w_minus << u_minus, xi_minus;
  if (C.rows() > 0 && inf_norm(C * w_minus) > spec.tol.constraint) {
    throw SimError(ErrorKind::InvalidState, "pre-impact velocity violates the constraints");
  }
  Vec normal = Vec::Zero(r + k);
  normal.head(r) = db;

  JumpProblem prob;
  prob.momentum = [&](const Vec& w) { return spec.momentum(sigma, w.head(r), w.tail(k)); };
  prob.hessian = [&](const Vec& w) { return spec.hessian(sigma, w.head(r), w.tail(k)); };
  prob.energy = [&](const Vec& w) {
    return spec.momentum(sigma, w.head(r), w.tail(k)).dot(w) -
           spec.lag.ell(sigma, w.head(r), w.tail(k));
  };
  prob.normal = normal;
  prob.constraints = C;
  prob.constraint_tol = spec.tol.constraint;
  prob.newton_tol = spec.tol.newton_residual;
  prob.rank_tol = spec.tol.rank;
  const JumpSolution sol = solve_elastic_jump(prob, w_minus, opts);

  ReducedImpactRecord rec;
  rec.t_impact = t;
  rec.sigma = sigma;
  rec.u_minus = u_minus;
  rec.xi_minus = xi_minus;
  rec.u_plus = sol.w_plus.head(r);
  rec.xi_plus = sol.w_plus.tail(k);
  rec.y_minus = spec.lag.dell_du(sigma, u_minus, xi_minus);
  rec.rho_minus = spec.lag.dell_dxi(sigma, u_minus, xi_minus);
  rec.y_plus = spec.lag.dell_du(sigma, rec.u_plus, rec.xi_plus);
  rec.rho_plus = spec.lag.dell_dxi(sigma, rec.u_plus, rec.xi_plus);
  rec.lambda0 = sol.lambda0;
  rec.lambda_h = sol.lambda.head(Dh.rows());
  rec.lambda_v = literal(spec) ? Vec(Vec::Zero(Dv.rows())) : Vec(sol.lambda.tail(Dv.rows()));
  rec.e_minus = reduced_energy(spec, sigma, rec.u_minus, rec.xi_minus, rec.y_minus, rec.rho_minus);
  rec.e_plus = reduced_energy(spec, sigma, rec.u_plus, rec.xi_plus, rec.y_plus, rec.rho_plus);
  if (literal(spec) && Dv.rows() > 0) rec.vertical_residual = inf_norm(Dv * rec.xi_plus);
  return rec;
}

namespace {

Vec project_reduced(const ReducedSystemSpec& spec, const Vec& sigma, const Vec& w) {
  const int r = spec.r, k = spec.k();
  const Mat Dh = spec.delta_sigma.rows(sigma);
  const Mat Dv = literal(spec) ? Mat(0, k) : spec.delta_gtilde.rows(sigma);
  const Mat C = block_constraints(Dh, Dv, r, k);
  if (C.rows() == 0) return w;
  const Mat H = spec.hessian(sigma, w.head(r), w.tail(k));
  return linalg::solve_saddle(H, C, H * w, Vec::Zero(C.rows()), spec.tol.kkt_residual).x;
}

}  // namespace

ReducedState reduced_step(const ReducedSystemSpec& spec, const ReducedState& s, double dt,
                          const IntegratorOptions& opts) {
  const int r = spec.r, k = spec.k();
  ReducedState out;
  out.t = s.t + dt;
  Vec w(r + k);
  if (dt == 0.0) {
    out.sigma = s.sigma;
    w << s.u, s.xi;
  } else {
    const auto acc = [&](const Vec& sg, const Vec& uu, const Vec& xx) {
      const LpRate rate = lp_rhs(spec, sg, uu, xx);
      Vec a(r + k);
      a << rate.udot, rate.xidot;
      return a;
    };
    Vec w0(r + k);
    w0 << s.u, s.xi;
    const Vec k1s = s.u;
    const Vec k1w = acc(s.sigma, s.u, s.xi);
    const Vec w2 = w0 + 0.5 * dt * k1w;
    const Vec k2s = w2.head(r);
    const Vec k2w = acc(s.sigma + 0.5 * dt * k1s, w2.head(r), w2.tail(k));
    const Vec w3 = w0 + 0.5 * dt * k2w;
    const Vec k3s = w3.head(r);
    const Vec k3w = acc(s.sigma + 0.5 * dt * k2s, w3.head(r), w3.tail(k));
    const Vec w4 = w0 + dt * k3w;
    const Vec k4s = w4.head(r);
    const Vec k4w = acc(s.sigma + dt * k3s, w4.head(r), w4.tail(k));
    out.sigma = s.sigma + (dt / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
    w = w0 + (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
  }
  if (opts.stabilization == Stabilization::post_step_projection) {
    w = project_reduced(spec, out.sigma, w);
    const ReducedDiagnostics d = reduced_diagnostics(
        spec, {out.t, out.sigma, w.head(r), Vec::Zero(r), w.tail(k), Vec::Zero(k)});
    const double drift = std::max(d.horizontal_residual,
                                  literal(spec) ? 0.0 : d.vertical_residual);
    if (drift > opts.constraint_tol) {
      throw SimError(ErrorKind::ConstraintDriftExceeded,
                     "reduced constraint residual " + std::to_string(drift) + " at t = " +
                         std::to_string(out.t));
    }
  }
  out.u = w.head(r);
  out.xi = w.tail(k);
  out.y = spec.lag.dell_du(out.sigma, out.u, out.xi);
  out.rho = spec.lag.dell_dxi(out.sigma, out.u, out.xi);
  return out;
}

ReducedDiagnostics reduced_diagnostics(const ReducedSystemSpec& spec, const ReducedState& s) {
  ReducedDiagnostics d;
  d.energy = reduced_energy(spec, s);
  const Mat Dh = spec.delta_sigma.rows(s.sigma);
  const Mat Dv = spec.delta_gtilde.rows(s.sigma);
  if (Dh.rows() > 0) d.horizontal_residual = inf_norm(Dh * s.u);
  if (Dv.rows() > 0) d.vertical_residual = inf_norm(Dv * s.xi);
  Vec mom(spec.r + spec.k());
  mom << s.y, s.rho;
  d.legendre_residual =
      inf_norm(mom - spec.momentum(s.sigma, s.u, s.xi)) / (1.0 + inf_norm(mom));
  return d;
}

namespace {

struct ReducedModel {
  using State = ReducedState;
  using Event = ReducedImpactRecord;

  const ReducedSystemSpec& spec;
  const IntegratorOptions& opts;

  double time(const State& s) const { return s.t; }
  Vec position(const State& s) const { return s.sigma; }
  Vec rate(const State& s) const { return s.u; }
  State advance(const State& s, double dt) const { return reduced_step(spec, s, dt, opts); }
  const BoundarySpec* boundary() const { return spec.boundary ? &*spec.boundary : nullptr; }
  void admit(const State& s) const {
    if (spec.guard) spec.guard(s.sigma);
  }
  std::pair<State, Event> resolve(const State& at) const {
    ReducedImpactRecord rec = reduced_impact_map(spec, at.sigma, at.u, at.xi, at.t, opts.impact);
    State post{at.t, at.sigma, rec.u_plus, rec.y_plus, rec.xi_plus, rec.rho_plus};
    return {post, std::move(rec)};
  }
};

}  // namespace

ReducedTrajectory integrate_reduced(const ReducedSystemSpec& spec, const ReducedState& s0,
                                    double t_final, const IntegratorOptions& opts) {
  if (!(opts.h > 0.0)) throw SimError(ErrorKind::InvalidParams, "h must be positive");
  if (!(t_final > s0.t)) throw SimError(ErrorKind::InvalidParams, "t_final must exceed t0");
  if (s0.sigma.size() != spec.r || s0.u.size() != spec.r || s0.xi.size() != spec.k()) {
    throw SimError(ErrorKind::InvalidState, "initial reduced state has the wrong dimension");
  }
  if (spec.boundary) {
    const double b0 = spec.boundary->b(s0.sigma);
    const bool leaving = std::abs(b0) <= spec.tol.boundary &&
                         spec.boundary->db(s0.sigma).dot(s0.u) < 0.0;
    if (!(b0 < 0.0) && !leaving) {
      throw SimError(ErrorKind::InvalidState, "initial shape is not in the admissible region");
    }
  }
  ReducedState start = s0;
  start.y = spec.lag.dell_du(s0.sigma, s0.u, s0.xi);
  start.rho = spec.lag.dell_dxi(s0.sigma, s0.u, s0.xi);
  {
    const ReducedDiagnostics d = reduced_diagnostics(spec, start);
    if (d.horizontal_residual > opts.constraint_tol ||
        (!literal(spec) && d.vertical_residual > opts.constraint_tol)) {
      throw SimError(ErrorKind::InvalidState, "initial reduced velocity violates the constraints");
    }
  }

  const ReducedModel model{spec, opts};
  auto run = detail::run_hybrid(model, start, t_final, opts.h, opts.zeno, spec.tol.boundary);

  ReducedTrajectory traj;
  traj.h = opts.h;
  traj.samples = std::move(run.samples);
  traj.segment = std::move(run.segment);
  traj.events = std::move(run.events);
  traj.grazes = std::move(run.grazes);
  for (const auto& s : traj.samples) {
    const LpRate rate = lp_rhs(spec, s.sigma, s.u, s.xi);
    traj.lambda_h.push_back(rate.lambda_h);
    traj.lambda_v.push_back(rate.lambda_v);
    traj.diagnostics.push_back(reduced_diagnostics(spec, s));
  }
  return traj;
}

Mat BundleLayout::connection(const Vec& sigma) const {
  if (A) return A(sigma);
  return Mat::Zero(static_cast<Eigen::Index>(group_index.size()), sigma.size());
}

namespace {

void check_layout(const BundleLayout& layout, Eigen::Index n) {
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  const auto mark = [&](int i) {
    if (i < 0 || i >= n) throw SimError(ErrorKind::LayoutMismatch, "layout index out of range");
    ++seen[static_cast<std::size_t>(i)];
  };
  for (int i : layout.shape_index) mark(i);
  for (int i : layout.group_index) mark(i);
  for (int c : seen) {
    if (c != 1) {
      throw SimError(ErrorKind::LayoutMismatch,
                     "shape and group indices must partition the coordinates");
    }
  }
}

Vec gather(const Vec& x, const std::vector<int>& idx) {
  Vec out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = x(idx[i]);
  return out;
}

}  // namespace

ReducedState reduce_state(const BundleLayout& layout, const PontryaginState& full) {
  const Eigen::Index n = full.q.size();
  if (full.v.size() != n || full.p.size() != n) {
    throw SimError(ErrorKind::LayoutMismatch, "state components have different sizes");
  }
  check_layout(layout, n);
  ReducedState s;
  s.t = full.t;
  s.sigma = gather(full.q, layout.shape_index);
  s.u = gather(full.v, layout.shape_index);
  const Mat A = layout.connection(s.sigma);
  if (A.rows() != static_cast<Eigen::Index>(layout.group_index.size()) ||
      A.cols() != s.sigma.size()) {
    throw SimError(ErrorKind::LayoutMismatch, "connection has the wrong shape");
  }
  s.xi = gather(full.v, layout.group_index) - A * s.u;
  s.rho = gather(full.p, layout.group_index);
  s.y = gather(full.p, layout.shape_index) + A.transpose() * s.rho;
  return s;
}

Vec group_coordinates(const BundleLayout& layout, const Vec& q) {
  check_layout(layout, q.size());
  return gather(q, layout.group_index);
}

namespace {

const double kGaussLo = 0.5 - std::sqrt(3.0) / 6.0;
const double kGaussHi = 0.5 + std::sqrt(3.0) / 6.0;

Mat magnus_step(const LieAlgebraSpec& alg, const std::function<Vec(double)>& w, double t,
                double h) {
  const Mat A1 = generator_combination(alg, w(t + kGaussLo * h));
  const Mat A2 = generator_combination(alg, w(t + kGaussHi * h));
  const Mat omega = 0.5 * h * (A1 + A2) + (std::sqrt(3.0) / 12.0) * h * h * (A1 * A2 - A2 * A1);
  return omega.exp();
}

}  // namespace

std::vector<Mat> reconstruct(const LieAlgebraSpec& alg, const std::function<Vec(double)>& w,
                             double t0, double t1, double h, const Mat& g0) {
  if (!(h > 0.0)) throw SimError(ErrorKind::InvalidParams, "h must be positive");
  if (static_cast<int>(alg.generators.size()) != alg.k) {
    throw SimError(ErrorKind::MissingGenerators, "reconstruction needs matrix generators");
  }
  std::vector<Mat> out{g0};
  const long n = static_cast<long>(std::ceil((t1 - t0) / h - 1e-9));
  Mat g = g0;
  for (long i = 0; i < n; ++i) {
    const double ta = t0 + static_cast<double>(i) * h;
    const double tb = std::min(t0 + static_cast<double>(i + 1) * h, t1);
    g = g * magnus_step(alg, w, ta, tb - ta);
    out.push_back(g);
  }
  return out;
}

namespace {

struct Node {
  double t;
  Vec w;
  int sample = -1;
};

Vec lagrange_eval(const std::vector<Node>& nodes, std::size_t first, std::size_t count,
                  double t) {
  Vec out = Vec::Zero(nodes[first].w.size());
  for (std::size_t i = first; i < first + count; ++i) {
    double basis = 1.0;
    for (std::size_t j = first; j < first + count; ++j) {
      if (j != i) basis *= (t - nodes[j].t) / (nodes[i].t - nodes[j].t);
    }
    out += basis * nodes[i].w;
  }
  return out;
}

}  // namespace

std::vector<Mat> reconstruct(const ReducedSystemSpec& spec, const ReducedTrajectory& traj,
                             const Mat& g0) {
  const LieAlgebraSpec& alg = spec.algebra;
  const bool matrix_group = static_cast<int>(alg.generators.size()) == alg.k;
  if (!matrix_group && !alg.abelian()) {
    throw SimError(ErrorKind::MissingGenerators, "nonabelian reconstruction needs generators");
  }
  if (!matrix_group && (g0.rows() != alg.k || g0.cols() != 1)) {
    throw SimError(ErrorKind::InvalidParams, "abelian reconstruction expects k×1 coordinates");
  }
  const auto w_of = [&](const Vec& sigma, const Vec& u, const Vec& xi) -> Vec {
    return xi + spec.connection(sigma) * u;
  };

  std::vector<Mat> out(traj.samples.size());
  Mat g = g0;
  const std::size_t n_seg = traj.events.size() + 1;
  const double merge_tol = 1e-12 * std::max(traj.h, 1e-300);
  bool first_node = true;
  double t_prev = 0.0;

  for (std::size_t seg = 0; seg < n_seg; ++seg) {
    std::vector<Node> nodes;
    const auto push = [&](double t, Vec w, int sample) {
      if (!nodes.empty() && std::abs(t - nodes.back().t) <= merge_tol) {
        if (sample >= 0) nodes.back().sample = sample;
        return;
      }
      nodes.push_back({t, std::move(w), sample});
    };
    if (seg > 0) {
      const auto& e = traj.events[seg - 1];
      push(e.t_impact, w_of(e.sigma, e.u_plus, e.xi_plus), -1);
    }
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
      if (traj.segment[i] != static_cast<int>(seg)) continue;
      const auto& s = traj.samples[i];
      push(s.t, w_of(s.sigma, s.u, s.xi), static_cast<int>(i));
    }
    if (seg < traj.events.size()) {
      const auto& e = traj.events[seg];
      push(e.t_impact, w_of(e.sigma, e.u_minus, e.xi_minus), -1);
    }
    if (nodes.empty()) continue;

    // The group variable is continuous across impacts, so g carries over; the
    // first node of a later segment sits at the previous segment's last time.
    if (first_node) {
      first_node = false;
    } else if (std::abs(nodes.front().t - t_prev) > merge_tol) {
      throw SimError(ErrorKind::GridMismatch, "reduced trajectory segments are not contiguous");
    }
    if (nodes.front().sample >= 0) out[static_cast<std::size_t>(nodes.front().sample)] = g;

    const std::size_t count = std::min<std::size_t>(4, nodes.size());
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      std::size_t first = i > 0 ? i - 1 : 0;
      if (first + count > nodes.size()) first = nodes.size() - count;
      const double ta = nodes[i].t;
      const double dt = nodes[i + 1].t - ta;
      const auto w = [&](double t) { return lagrange_eval(nodes, first, count, t); };
      if (matrix_group) {
        g = g * magnus_step(alg, w, ta, dt);
      } else {
        g += 0.5 * dt * (w(ta + kGaussLo * dt) + w(ta + kGaussHi * dt));
      }
      if (nodes[i + 1].sample >= 0) out[static_cast<std::size_t>(nodes[i + 1].sample)] = g;
    }
    t_prev = nodes.back().t;
  }
  return out;
}

}  // namespace nsnh
