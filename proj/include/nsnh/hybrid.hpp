#pragma once

// Grid-aligned hybrid driver shared by the full and the reduced integrators.
//
// Samples live on t_k = t0 + k h. A step whose dense output crosses b = 0 is
// cut at the crossing, the reset map is applied, and the remaining fraction of
// the step is integrated from the post-impact state so the grid is preserved.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nsnh/impact.hpp"
#include "nsnh/log.hpp"

namespace nsnh::detail {

// Model requirements:
//   using State; using Event;
//   double time(const State&) const;
//   Vec position(const State&) const;      // argument of the boundary function
//   Vec rate(const State&) const;          // d/dt of position
//   State advance(const State&, double dt) const;
//   const BoundarySpec* boundary() const;
//   std::pair<State, Event> resolve(const State& at_contact) const;
//   void admit(const State&) const;        // configuration guard, may throw
template <class Model>
struct HybridResult {
  std::vector<typename Model::State> samples;
  std::vector<int> segment;
  std::vector<typename Model::Event> events;
  std::vector<double> event_times;
  std::vector<double> grazes;
};

template <class Model>
HybridResult<Model> run_hybrid(const Model& model, const typename Model::State& s0,
                               double t_final, double h, const ZenoPolicy& zeno,
                               double boundary_tol) {
  using State = typename Model::State;
  HybridResult<Model> out;
  const double t0 = model.time(s0);
  const BoundarySpec* bnd = model.boundary();

  model.admit(s0);
  out.samples.push_back(s0);
  out.segment.push_back(0);

  const long n_steps = static_cast<long>(std::ceil((t_final - t0) / h - 1e-9));
  State s = s0;
  long next = 1;
  while (next <= n_steps) {
    const double t_target = std::min(t0 + static_cast<double>(next) * h, t_final);
    const double dt = t_target - model.time(s);
    if (dt <= 1e-12 * h) {
      // Impact landed (numerically) on the grid point itself.
      s = model.advance(s, 0.0);
      out.samples.push_back(s);
      out.segment.push_back(static_cast<int>(out.events.size()));
      ++next;
      continue;
    }
    State trial = model.advance(s, dt);

    std::optional<double> hit;
    if (bnd) {
      DenseSegment seg{model.time(s), t_target, model.position(s), model.position(trial),
                       model.rate(s), model.rate(trial)};
      hit = locate_crossing(seg, *bnd, boundary_tol);
    }
    if (!hit) {
      model.admit(trial);
      s = std::move(trial);
      out.samples.push_back(s);
      out.segment.push_back(static_cast<int>(out.events.size()));
      ++next;
      continue;
    }

    // Refine the crossing on the actual (non-interpolated) flow.
    const double t_start = model.time(s);
    double t_star = std::clamp(*hit, t_start, t_target);
    State contact = model.advance(s, t_star - t_start);
    bool grazing = false;
    for (int it = 0; it < 12; ++it) {
      const Vec q = model.position(contact);
      const double b = bnd->b(q);
      const double rate = bnd->db(q).dot(model.rate(contact));
      if (std::abs(b) <= 1e-3 * boundary_tol) break;
      if (rate <= 1e-14) {
        grazing = true;
        break;
      }
      const double t_new = std::clamp(t_star - b / rate, t_start, t_target);
      if (t_new == t_star) break;
      t_star = t_new;
      contact = model.advance(s, t_star - t_start);
    }
    {
      const Vec q = model.position(contact);
      if (bnd->db(q).dot(model.rate(contact)) <= 1e-14) grazing = true;
    }
    if (grazing) {
      log::warn("grazing contact at t = {:.17g}; impact map not applied", t_star);
      out.grazes.push_back(t_star);
      model.admit(trial);
      s = std::move(trial);
      out.samples.push_back(s);
      out.segment.push_back(static_cast<int>(out.events.size()));
      ++next;
      continue;
    }

    auto [post, event] = model.resolve(contact);
    model.admit(post);
    out.events.push_back(std::move(event));
    out.event_times.push_back(t_star);
    const std::size_t n_events = out.event_times.size();
    if (static_cast<long>(n_events) > zeno.max_impacts) {
      throw SimError(ErrorKind::ZenoSuspected,
                     "impact count exceeds " + std::to_string(zeno.max_impacts));
    }
    if (n_events >= 2) {
      const double gap = out.event_times[n_events - 1] - out.event_times[n_events - 2];
      if (gap < zeno.min_interimpact_time) {
        throw SimError(ErrorKind::ZenoSuspected,
                       "impacts " + std::to_string(n_events - 2) + " and " +
                           std::to_string(n_events - 1) + " only " + std::to_string(gap) +
                           " apart");
      }
    }
    log::debug("impact {} at t = {:.17g}", out.events.size(), t_star);
    s = std::move(post);
  }
  return out;
}

}  // namespace nsnh::detail
