#include "nsnh/impact.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "nsnh/linalg.hpp"
#include "nsnh/log.hpp"

namespace nsnh {

Vec DenseSegment::position(double t) const {
  const double h = t1 - t0;
  if (h == 0.0) return q0;
  const double s = (t - t0) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * q0 + (s3 - 2 * s2 + s) * h * v0 + (-2 * s3 + 3 * s2) * q1 +
         (s3 - s2) * h * v1;
}

Vec DenseSegment::velocity(double t) const {
  const double h = t1 - t0;
  if (h == 0.0) return v0;
  const double s = (t - t0) / h;
  const double s2 = s * s;
  return ((6 * s2 - 6 * s) * q0 + (-6 * s2 + 6 * s) * q1) / h + (3 * s2 - 4 * s + 1) * v0 +
         (3 * s2 - 2 * s) * v1;
}

std::optional<double> locate_crossing(const DenseSegment& seg, const BoundarySpec& bnd,
                                      double boundary_tol) {
  constexpr int kProbes = 16;
  const auto g = [&](double t) { return bnd.b(seg.position(t)); };
  const double dt = (seg.t1 - seg.t0) / kProbes;
  if (dt <= 0.0) return std::nullopt;

  double lo = seg.t0;
  double g_lo = g(lo);
  double g_max = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= kProbes; ++i) {
    const double hi = (i == kProbes) ? seg.t1 : seg.t0 + i * dt;
    const double g_hi = g(hi);
    if (g_hi > 0.0) {
      if (g_lo > 0.0) {
        // Already outside at the start of the bracket; only possible right at t0.
        return lo;
      }
      if (g_lo == 0.0) return lo;
      std::uintmax_t iters = 200;
      const auto stop = [](double a, double b) {
        return std::abs(b - a) <= 4 * std::numeric_limits<double>::epsilon() * (1 + std::abs(a));
      };
      const auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, g_lo, g_hi, stop, iters);
      const double ga = g(a), gb = g(b);
      return std::abs(ga) <= std::abs(gb) ? a : b;
    }
    g_max = std::max(g_max, g_hi);
    lo = hi;
    g_lo = g_hi;
  }
  if (g_max > -boundary_tol) {
    log::warn("grazing approach to the boundary near t = {} without a sign change", seg.t1);
  }
  return std::nullopt;
}

namespace {

struct NewtonResult {
  bool converged = false;
  Vec w;
  double lambda0 = 0.0;
  Vec lambda;
  int iterations = 0;
};

NewtonResult newton_jump(const JumpProblem& prob, const Vec& w_minus, const Vec& p_minus,
                         double e_minus, const Vec& w_start, const ImpactOptions& opts) {
  const Eigen::Index n = w_minus.size();
  const Eigen::Index m = prob.constraints.rows();
  const Mat& D = prob.constraints;
  const double p_scale = 1.0 + inf_norm(p_minus);
  const double e_scale = 1.0 + std::abs(e_minus);
  const double w_scale = 1.0 + inf_norm(w_minus);

  Mat jump_dirs(n, m + 1);
  jump_dirs.col(0) = prob.normal;
  if (m > 0) jump_dirs.rightCols(m) = D.transpose();

  NewtonResult res;
  res.w = w_start;
  {
    const Vec coeffs = linalg::span_coefficients(jump_dirs, prob.momentum(w_start) - p_minus);
    res.lambda0 = coeffs(0);
    res.lambda = coeffs.tail(m);
  }

  const auto residual = [&](const Vec& w, double l0, const Vec& l) {
    Vec F(n + 1 + m);
    F.head(n) = prob.momentum(w) - p_minus - l0 * prob.normal;
    if (m > 0) F.head(n) -= D.transpose() * l;
    F(n) = prob.energy(w) - e_minus;
    if (m > 0) F.tail(m) = D * w;
    return F;
  };
  const auto merit = [&](const Vec& F) {
    double r = inf_norm(F.head(n)) / p_scale;
    r = std::max(r, std::abs(F(n)) / e_scale);
    if (m > 0) r = std::max(r, inf_norm(F.tail(m)) / w_scale);
    return r;
  };

  Vec F = residual(res.w, res.lambda0, res.lambda);
  double phi = merit(F);
  for (int it = 0; it < opts.max_newton_iters; ++it) {
    if (phi <= prob.newton_tol) {
      res.converged = true;
      res.iterations = it;
      return res;
    }
    const Mat H = prob.hessian(res.w);
    Mat J = Mat::Zero(n + 1 + m, n + 1 + m);
    J.topLeftCorner(n, n) = H;
    J.block(0, n, n, 1) = -prob.normal;
    if (m > 0) {
      J.block(0, n + 1, n, m) = -D.transpose();
      J.bottomLeftCorner(m, n) = D;
    }
    J.block(n, 0, 1, n) = (H.transpose() * res.w).transpose();
    Eigen::FullPivLU<Mat> lu(J);
    if (!lu.isInvertible()) break;
    const Vec dz = lu.solve(-F);

    double alpha = 1.0;
    bool improved = false;
    for (int k = 0; k <= opts.max_halvings; ++k, alpha *= 0.5) {
      const Vec w_try = res.w + alpha * dz.head(n);
      const double l0_try = res.lambda0 + alpha * dz(n);
      const Vec l_try = res.lambda + alpha * dz.tail(m);
      const Vec F_try = residual(w_try, l0_try, l_try);
      const double phi_try = merit(F_try);
      if (phi_try < phi || phi_try <= prob.newton_tol) {
        res.w = w_try;
        res.lambda0 = l0_try;
        res.lambda = l_try;
        F = F_try;
        phi = phi_try;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  res.converged = phi <= prob.newton_tol;
  res.iterations = opts.max_newton_iters;
  return res;
}

}  // namespace

JumpSolution solve_elastic_jump(const JumpProblem& prob, const Vec& w_minus,
                                const ImpactOptions& opts) {
  const Mat& D = prob.constraints;
  const Mat basis = linalg::null_space(D, prob.rank_tol);
  const Vec n_in = basis.transpose() * prob.normal;
  if (n_in.norm() <= prob.rank_tol * prob.normal.norm()) {
    throw SimError(ErrorKind::DegenerateContact,
                   "contact conormal lies in the constraint annihilator");
  }

  const Vec p_minus = prob.momentum(w_minus);
  const double e_minus = prob.energy(w_minus);

  // Reflection of w⁻ inside Δ in the fiber-Hessian metric restricted to Δ.
  JumpSolution out;
  Mat metric = basis.transpose() * prob.hessian(w_minus) * basis;
  Eigen::LLT<Mat> llt(metric);
  if (llt.info() != Eigen::Success) {
    metric = Mat::Identity(basis.cols(), basis.cols());
    llt.compute(metric);
    out.kinetic_metric = false;
  }
  const Vec coords = basis.transpose() * w_minus;
  const Vec dir = llt.solve(n_in);
  const double normal_speed = n_in.dot(coords) / n_in.dot(dir);

  const double trivial_radius = 10.0 * prob.constraint_tol * (1.0 + inf_norm(w_minus));
  constexpr std::array<double, 4> kFactors{2.0, 1.5, 2.5, 3.0};

  bool saw_trivial = false;
  std::optional<NewtonResult> accepted;
  int attempts = 0;
  for (double factor : kFactors) {
    if (attempts++ >= opts.max_attempts) break;
    const Vec guess = basis * (coords - factor * normal_speed * dir);
    NewtonResult r = newton_jump(prob, w_minus, p_minus, e_minus, guess, opts);
    if (!r.converged) continue;
    if (inf_norm(r.w - w_minus) <= trivial_radius) {
      saw_trivial = true;
      continue;
    }
    if (prob.normal.dot(r.w) >= 0.0) continue;
    if (!accepted) {
      accepted = std::move(r);
      if (!opts.check_multiplicity) break;
    } else if (inf_norm(r.w - accepted->w) > 1e-6 * (1.0 + inf_norm(accepted->w))) {
      log::warn("impact system has a second nontrivial root; keeping the reflection root");
      break;
    } else {
      break;
    }
  }
  if (!accepted) {
    if (saw_trivial) {
      throw SimError(ErrorKind::TrivialRootOnly, "Newton only reached the trivial root w+ = w-");
    }
    throw SimError(ErrorKind::NoConvergence, "impact Newton iteration did not converge");
  }
  out.w_plus = accepted->w;
  out.lambda0 = accepted->lambda0;
  out.lambda = accepted->lambda;
  out.iterations = accepted->iterations;
  return out;
}

ImpactRecord impact_map(const SystemSpec& sys, const Vec& q, const Vec& v_minus, double t,
                        const ImpactOptions& opts) {
  if (!sys.boundary) throw SimError(ErrorKind::InvalidState, "system has no boundary");
  const Coannihilator co = impact_coannihilator(sys.distribution, *sys.boundary, q, sys.tol);
  const Vec db = co.rows.row(0).transpose();
  if (db.norm() <= sys.tol.rank) {
    throw SimError(ErrorKind::DegenerateContact, "db(q) vanishes at the impact point");
  }
  if (co.degenerate) {
    throw SimError(ErrorKind::DegenerateContact, "db(q) lies in the row span of mu(q)");
  }
  if (db.dot(v_minus) <= 0.0) {
    throw SimError(ErrorKind::InvalidState, "velocity is not approaching the boundary");
  }
  const Mat mu = sys.distribution.rows(q);
  if (mu.rows() > 0 && inf_norm(mu * v_minus) > sys.tol.constraint) {
    throw SimError(ErrorKind::InvalidState, "pre-impact velocity violates the constraints");
  }

  const LagrangianSpec& lag = sys.lagrangian;
  JumpProblem prob;
  prob.momentum = [&](const Vec& v) { return lag.dL_dv(q, v); };
  prob.hessian = [&](const Vec& v) { return lag.mass(q, v); };
  prob.energy = [&](const Vec& v) { return energy(lag, q, v, lag.dL_dv(q, v)); };
  prob.normal = db;
  prob.constraints = mu;
  prob.constraint_tol = sys.tol.constraint;
  prob.newton_tol = sys.tol.newton_residual;
  prob.rank_tol = sys.tol.rank;

  const JumpSolution sol = solve_elastic_jump(prob, v_minus, opts);

  ImpactRecord rec;
  rec.t_impact = t;
  rec.q = q;
  rec.v_minus = v_minus;
  rec.v_plus = sol.w_plus;
  rec.p_minus = lag.dL_dv(q, v_minus);
  rec.p_plus = lag.dL_dv(q, sol.w_plus);
  rec.lambda0 = sol.lambda0;
  rec.lambda = sol.lambda;
  rec.e_minus = energy(lag, q, rec.v_minus, rec.p_minus);
  rec.e_plus = energy(lag, q, rec.v_plus, rec.p_plus);
  return rec;
}

void zeno_guard(std::span<const double> impact_times, const ZenoPolicy& policy) {
  if (static_cast<long>(impact_times.size()) > policy.max_impacts) {
    throw SimError(ErrorKind::ZenoSuspected,
                   "impact count " + std::to_string(impact_times.size()) + " exceeds " +
                       std::to_string(policy.max_impacts));
  }
  for (std::size_t i = 1; i < impact_times.size(); ++i) {
    const double gap = impact_times[i] - impact_times[i - 1];
    if (gap < policy.min_interimpact_time) {
      throw SimError(ErrorKind::ZenoSuspected,
                     "impacts " + std::to_string(i - 1) + " and " + std::to_string(i) +
                         " are " + std::to_string(gap) + " apart");
    }
  }
}

void zeno_guard(const std::vector<ImpactRecord>& events, const ZenoPolicy& policy) {
  std::vector<double> times;
  times.reserve(events.size());
  for (const auto& e : events) times.push_back(e.t_impact);
  zeno_guard(std::span<const double>(times), policy);
}

ResetSeparation reset_separation(const SystemSpec& sys, const Vec& q, const Vec& v) {
  if (!sys.boundary) throw SimError(ErrorKind::NotOnBoundary, "system has no boundary");
  const double bval = sys.boundary->b(q);
  if (std::abs(bval) > sys.tol.boundary) {
    throw SimError(ErrorKind::NotOnBoundary, "|b(q)| = " + std::to_string(std::abs(bval)));
  }
  ResetSeparation out;
  Mat g = sys.lagrangian.mass(q, v);
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) {
    g = Mat::Identity(q.size(), q.size());
    llt.compute(g);
    out.kinetic_metric = false;
  }
  const Vec db = sys.boundary->db(q);
  const Vec raised = llt.solve(db);
  const Vec n_hat = raised / std::sqrt(db.dot(raised));
  const double normal_coeff = v.dot(g * n_hat);
  const Vec reflected = v - 2.0 * normal_coeff * n_hat;
  const Vec diff = reflected - v;
  out.separation = std::sqrt(diff.dot(g * diff));
  out.normal_norm = std::abs(normal_coeff);
  return out;
}

}  // namespace nsnh
