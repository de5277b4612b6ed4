#pragma once

// Method-of-lines integration of the reduced radial equation
//
//     v_tt = v_rr + v^5 / r^4,   v = r u,
//
// with v(t, 0) = 0, an outgoing (Sommerfeld) closure v_t + v_r = 0 at r_max,
// second-order central differences in r and classical RK4 in t.
//
// The step is the smaller of the CFL limit cfl*dr and the nonlinear time scale
// nonlinear_dt / sup|u|^2 (the ODE u'' = u^5 has rate ~ u^2). When the profile
// concentrates below the grid scale, the domain is zoomed onto its inner half
// with the same node count; outer-boundary errors then need a time of order
// r_max/2 to reach the origin, far longer than the remaining time to blow-up.

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nlw/grid.hpp"

namespace nlw {

struct EvolveConfig {
  double cfl = 0.5;
  double u_stop = 1e3;
  double t_horizon = 1.0;
  double refine_trigger = 0.1;   // zoom when concentration_scale * dr exceeds this
  int max_refinements = 24;
  double nonlinear_dt = 0.02;    // dt <= nonlinear_dt / sup|u|^2
  double refine_min_sup = 4.0;   // no zoom while sup|u| is below this
  std::size_t sample_every = 1;  // steps between samples / observer calls
  std::size_t snapshot_every = 0;  // samples between stored snapshots; 0 keeps only first and last

  void validate() const {
    if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("EvolveConfig: cfl must be in (0, 1]");
    if (!(u_stop > 10.0)) throw std::invalid_argument("EvolveConfig: u_stop must exceed 10");
    if (!(t_horizon > 0.0)) throw std::invalid_argument("EvolveConfig: t_horizon must be positive");
    if (max_refinements < 0) throw std::invalid_argument("EvolveConfig: max_refinements must be >= 0");
    if (!(nonlinear_dt > 0.0)) throw std::invalid_argument("EvolveConfig: nonlinear_dt must be positive");
    if (!(refine_min_sup > 0.0)) throw std::invalid_argument("EvolveConfig: refine_min_sup must be positive");
    if (sample_every == 0) throw std::invalid_argument("EvolveConfig: sample_every must be >= 1");
  }
};

enum class StopReason { horizon, u_stop, stalled };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::horizon: return "horizon";
    case StopReason::u_stop: return "u_stop";
    case StopReason::stalled: return "stalled";
  }
  return "?";
}

struct RunSample {
  double t = 0.0;
  double sup_u = 0.0;
  double e_free = 0.0;
  double lambda_fit = 0.0;  // concentration scale
  double dr = 0.0;
};

struct RunHistory {
  FieldState initial;
  FieldState final_state;
  std::vector<RunSample> samples;
  std::vector<FieldState> snapshots;
  StopReason stop = StopReason::horizon;
  std::size_t steps = 0;
  int refinements = 0;
  bool refinement_exhausted = false;
};

class IntegrationFailure : public std::runtime_error {
 public:
  IntegrationFailure(const std::string& what, FieldState last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const FieldState& last_good() const { return last_good_; }

 private:
  FieldState last_good_;
};

struct Derivative {
  std::vector<double> dv;
  std::vector<double> dvt;
};

/// Closure for the last node: one-sided second-order upwinding of v_t = -v_r (and likewise for vt).
inline std::pair<double, double> outer_boundary(const FieldState& s) {
  const std::size_t n = s.grid.n();
  const double h = s.grid.dr();
  const auto upwind = [&](const std::vector<double>& f) {
    return -(3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2]) / (2.0 * h);
  };
  return {upwind(s.v), upwind(s.vt)};
}

/// Rate of change of scheme_energy through the outer node. The boundary node moves by the
/// upwind derivative rather than by vt, so this is the only term that survives summation by parts.
inline double boundary_flux(const FieldState& s) {
  const std::size_t n = s.grid.n();
  return 4.0 * std::numbers::pi * outer_boundary(s).first * (s.v[n] - s.v[n - 1]) / s.grid.dr();
}

inline Derivative rhs(const FieldState& s) {
  const auto& g = s.grid;
  const std::size_t n = g.n();
  const double inv_h2 = 1.0 / (g.dr() * g.dr());
  Derivative d;
  d.dv.assign(g.size(), 0.0);
  d.dvt.assign(g.size(), 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    d.dv[j] = s.vt[j];
    const double r = g.r(j);
    const double u = s.v[j] / r;
    const double u2 = u * u;
    // v^5 / r^4 written as r u^5 so small r_j never forms r^4.
    d.dvt[j] = (s.v[j + 1] - 2.0 * s.v[j] + s.v[j - 1]) * inv_h2 + r * u2 * u2 * u;
  }
  const auto [bv, bvt] = outer_boundary(s);
  d.dv[n] = bv;
  d.dvt[n] = bvt;
  return d;
}

namespace detail {

inline FieldState axpy(const FieldState& s, double a, const Derivative& k) {
  FieldState out = s;
  for (std::size_t j = 0; j < s.v.size(); ++j) {
    out.v[j] += a * k.dv[j];
    out.vt[j] += a * k.dvt[j];
  }
  return out;
}

}  // namespace detail

/// One classical RK4 step; origin values stay exactly zero.
inline FieldState step(const FieldState& s, double dt) {
  const auto k1 = rhs(s);
  const auto k2 = rhs(detail::axpy(s, 0.5 * dt, k1));
  const auto k3 = rhs(detail::axpy(s, 0.5 * dt, k2));
  const auto k4 = rhs(detail::axpy(s, dt, k3));
  FieldState out = s;
  for (std::size_t j = 0; j < s.v.size(); ++j) {
    out.v[j] += dt / 6.0 * (k1.dv[j] + 2.0 * k2.dv[j] + 2.0 * k3.dv[j] + k4.dv[j]);
    out.vt[j] += dt / 6.0 * (k1.dvt[j] + 2.0 * k2.dvt[j] + 2.0 * k3.dvt[j] + k4.dvt[j]);
  }
  out.v[0] = 0.0;
  out.vt[0] = 0.0;
  out.t = s.t + dt;
  return out;
}

inline double sup_abs_u(const FieldState& s) {
  double m = 0.0;
  for (double u : u_nodes(s)) m = std::max(m, std::abs(u));
  return m;
}

inline RunSample make_sample(const FieldState& s) {
  const auto nm = norms(s);
  RunSample out;
  out.t = s.t;
  out.sup_u = nm.sup_of_u;
  out.e_free = 0.5 * (nm.kinetic + nm.gradient);
  out.lambda_fit = concentration_scale(s);
  out.dr = s.grid.dr();
  return out;
}

using Observer = std::function<void(const FieldState&)>;

inline RunHistory evolve(const FieldState& s0, const EvolveConfig& cfg,
                         const std::vector<Observer>& observers = {}) {
  cfg.validate();
  s0.validate();
  RunHistory h;
  h.initial = s0;
  FieldState state = s0;
  std::size_t samples_since_snapshot = 0;

  auto record = [&](const FieldState& s) {
    h.samples.push_back(make_sample(s));
    for (const auto& obs : observers) obs(s);
    if (cfg.snapshot_every > 0 && samples_since_snapshot % cfg.snapshot_every == 0) h.snapshots.push_back(s);
    ++samples_since_snapshot;
  };
  if (cfg.snapshot_every == 0) h.snapshots.push_back(state);
  record(state);

  double sup = sup_abs_u(state);
  const double t_eps = 1e-12 * std::max(1.0, cfg.t_horizon);
  while (true) {
    if (state.t >= cfg.t_horizon - t_eps) {
      h.stop = StopReason::horizon;
      break;
    }
    if (sup >= cfg.u_stop) {
      h.stop = StopReason::u_stop;
      break;
    }
    double dt = cfg.cfl * state.grid.dr();
    if (sup > 0.0) dt = std::min(dt, cfg.nonlinear_dt / (sup * sup));
    if (dt < 1e-15 * std::max(1.0, std::abs(state.t))) {
      h.stop = StopReason::stalled;
      break;
    }
    bool final_step = false;
    if (state.t + dt >= cfg.t_horizon - t_eps) {
      dt = cfg.t_horizon - state.t;
      final_step = true;
    }
    FieldState next = step(state, dt);
    if (!next.all_finite()) {
      throw IntegrationFailure("evolve: nonfinite values before reaching u_stop", state);
    }
    if (final_step) next.t = cfg.t_horizon;
    state = std::move(next);
    ++h.steps;
    sup = sup_abs_u(state);

    if (h.steps % cfg.sample_every == 0 || final_step || sup >= cfg.u_stop) {
      record(state);
      // Zoom while the profile is under-resolved. Zooming discards the outer half of the
      // domain, so it is reserved for large, origin-centred profiles.
      while (sup >= cfg.refine_min_sup && h.samples.back().lambda_fit * state.grid.dr() > cfg.refine_trigger) {
        if (h.refinements >= cfg.max_refinements) {
          h.refinement_exhausted = true;
          break;
        }
        state = regrid(state, zoom_grid(state.grid));
        ++h.refinements;
        h.samples.back().dr = state.grid.dr();
      }
    }
  }
  if (h.snapshots.empty() || h.snapshots.back().t != state.t || !(h.snapshots.back().grid == state.grid)) {
    h.snapshots.push_back(state);
  }
  if (h.samples.back().t != state.t) h.samples.push_back(make_sample(state));
  h.final_state = std::move(state);
  return h;
}

}  // namespace nlw
