#pragma once

// Chaining of evolution segments across continuation events, the energy
// ledger, and the space-time residual of the weak formulation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlw/classifier.hpp"
#include "nlw/diagnostics.hpp"
#include "nlw/evolution.hpp"
#include "nlw/ground_state.hpp"
#include "nlw/profile.hpp"

namespace nlw {

enum class SegmentEnd { continuation, type_i, horizon, undetermined, max_segments };

inline const char* to_string(SegmentEnd e) {
  switch (e) {
    case SegmentEnd::continuation: return "continuation";
    case SegmentEnd::type_i: return "type_i";
    case SegmentEnd::horizon: return "horizon";
    case SegmentEnd::undetermined: return "undetermined";
    case SegmentEnd::max_segments: return "max_segments";
  }
  return "?";
}

struct SegmentRecord {
  std::size_t index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t N = 0;
  double energy_in = 0.0;
  double energy_out = 0.0;
  SegmentEnd end = SegmentEnd::horizon;
  std::string verdict;
  std::string detail;  // rate-fit values or the undetermined reason
  std::vector<SolitonProfile> bubbles;
};

/// States on either side of a continuation event.
struct ContinuationEvent {
  std::size_t segment = 0;
  FieldState before;  // u(T_i-) including the bubbles
  FieldState after;   // continue_past output
};

struct CanonicalTrajectory {
  std::vector<SegmentRecord> segments;
  std::vector<RunHistory> histories;  // one per segment, snapshots included
  std::vector<ContinuationEvent> events;
  SegmentEnd terminal = SegmentEnd::horizon;
  std::vector<std::string> violations;  // ledger or monotonicity failures
};

struct CanonicalConfig {
  EvolveConfig evolve;  // t_horizon is absolute
  ClassifierConfig classifier;
  std::size_t max_segments = 8;
  double ledger_tol = 0.01;  // in units of E(W)
};

/// A fixture hook: stop segment i at `time` and replace its end state by inject(end state).
struct Staging {
  double time = 0.0;
  std::function<FieldState(const FieldState&)> inject;
};
using StagingHook = std::function<std::optional<Staging>(std::size_t segment)>;

inline double ledger_energy(const FieldState& s) { return energy(s, std::nullopt, Tail::asymptotic).E; }

/// Residual of the decomposition, stamped at the state's time.
inline FieldState continue_past(const FieldState& s, const Decomposition& d) {
  if (d.N == 0) throw std::invalid_argument("continue_past: decomposition has no bubbles");
  if (!(d.residual.grid == s.grid)) throw std::invalid_argument("continue_past: decomposition grid differs from state");
  FieldState out = d.residual;
  out.t = s.t;
  return out;
}

/// Ledger check for one event; returns a description of the failure, if any.
inline std::optional<std::string> check_event(const SegmentRecord& r, double tol) {
  const double gap = r.energy_in - static_cast<double>(r.N) * soliton_energy() - r.energy_out;
  if (std::abs(gap) > tol * soliton_energy()) {
    return "segment " + std::to_string(r.index) + ": ledger gap " + std::to_string(gap / soliton_energy()) + " E(W)";
  }
  if (!(r.energy_out < r.energy_in)) {
    return "segment " + std::to_string(r.index) + ": energy did not decrease across the event";
  }
  return std::nullopt;
}

inline CanonicalTrajectory run_canonical(const FieldState& s0, const CanonicalConfig& cfg,
                                         const StagingHook& staging = nullptr,
                                         const std::vector<Observer>& observers = {}) {
  cfg.evolve.validate();
  cfg.classifier.validate();
  if (cfg.max_segments == 0) throw std::invalid_argument("run_canonical: max_segments must be >= 1");
  CanonicalTrajectory traj;
  FieldState start = s0;
  for (std::size_t i = 0;; ++i) {
    if (i == cfg.max_segments) {
      traj.terminal = SegmentEnd::max_segments;
      break;
    }
    const auto stage = staging ? staging(i) : std::nullopt;
    EvolveConfig ec = cfg.evolve;
    if (stage) ec.t_horizon = std::min(ec.t_horizon, stage->time);
    if (!(ec.t_horizon > start.t)) throw std::invalid_argument("run_canonical: segment has no time left");
    auto h = evolve(start, ec, observers);

    SegmentRecord rec;
    rec.index = i;
    rec.t_start = start.t;
    rec.t_end = h.final_state.t;
    rec.energy_in = ledger_energy(start);

    BlowupVerdict verdict;
    FieldState end_state = h.final_state;
    if (stage && h.stop == StopReason::horizon && h.final_state.t >= stage->time) {
      end_state = stage->inject(h.final_state);
      auto d = extract_all(end_state, cfg.classifier.extract);
      if (d.N >= 1) {
        verdict = TypeII{end_state.t, std::move(d)};
      } else {
        verdict = Undetermined{"staged state carries no bubble"};
      }
    } else {
      verdict = classify(h, cfg.classifier);
    }
    rec.verdict = verdict_name(verdict);
    if (const auto* t1 = std::get_if<TypeI>(&verdict)) {
      rec.detail = "T_est " + std::to_string(t1->T_est) + ", amp_fit " + std::to_string(t1->amp_fit) +
                   ", fit_quality " + std::to_string(t1->fit_quality);
    } else if (const auto* un = std::get_if<Undetermined>(&verdict)) {
      rec.detail = un->reason;
    }
    traj.histories.push_back(std::move(h));

    if (auto* t2 = std::get_if<TypeII>(&verdict)) {
      rec.energy_in = ledger_energy(end_state);
      start = continue_past(end_state, t2->decomposition);
      rec.N = t2->decomposition.N;
      rec.bubbles = t2->decomposition.profiles;
      rec.energy_out = ledger_energy(start);
      rec.detail = "T_est " + std::to_string(t2->T_est);
      traj.events.push_back({i, end_state, start});
      rec.end = SegmentEnd::continuation;
      if (auto bad = check_event(rec, cfg.ledger_tol)) traj.violations.push_back(*bad);
      traj.segments.push_back(rec);
      if (!(start.t < cfg.evolve.t_horizon)) {
        traj.terminal = SegmentEnd::horizon;
        break;
      }
      continue;
    }
    rec.energy_out = ledger_energy(traj.histories.back().final_state);
    if (std::holds_alternative<GlobalToHorizon>(verdict)) {
      rec.end = SegmentEnd::horizon;
      if (rec.energy_in < 0.0) {
        traj.violations.push_back("segment " + std::to_string(i) + ": negative energy reached the horizon");
      }
    } else if (std::holds_alternative<TypeI>(verdict)) {
      rec.end = SegmentEnd::type_i;
    } else {
      rec.end = SegmentEnd::undetermined;
    }
    traj.terminal = rec.end;
    traj.segments.push_back(rec);
    break;
  }
  return traj;
}

// ---- weak formulation -------------------------------------------------------

/// phi(t, r) = b((t - t_c)/rho_t) b((r - r_c)/rho_r) with the C^2 bump b(z) = chi(1 + |z|).
struct TestFunction {
  double t_c = 0.0, r_c = 0.0;
  double rho_t = 1.0, rho_r = 1.0;

  TestFunction() = default;
  TestFunction(double tc, double rc, double rt, double rr) : t_c(tc), r_c(rc), rho_t(rt), rho_r(rr) {
    if (!(rho_t > 0.0 && rho_r > 0.0)) throw std::invalid_argument("TestFunction: radii must be positive");
  }

  static double b(double z) { return smoothstep(1.0 + std::abs(z)); }
  static double db(double z) {
    const double d = smoothstep_d1(1.0 + std::abs(z));
    return z < 0.0 ? -d : d;
  }

  double operator()(double t, double r) const { return b((t - t_c) / rho_t) * b((r - r_c) / rho_r); }
  double dt(double t, double r) const { return db((t - t_c) / rho_t) / rho_t * b((r - r_c) / rho_r); }
  double dr(double t, double r) const { return b((t - t_c) / rho_t) * db((r - r_c) / rho_r) / rho_r; }
  double t_min() const { return t_c - rho_t; }
  double t_max() const { return t_c + rho_t; }
  double r_max() const { return r_c + rho_r; }
};

struct WeakSides {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;

  /// (lhs - rhs) with the same normalization as residual.
  double signed_residual() const { return (lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1.0}); }
};

namespace detail {

struct WeakIntegrands {
  double lhs = 0.0;  // int (u_t phi_t - grad u . grad phi) dx
  double rhs = 0.0;  // -int u^5 phi dx
  double initial = 0.0;  // int u_t phi dx
};

inline WeakIntegrands weak_integrands(const FieldState& s, const TestFunction& phi) {
  const auto& g = s.grid;
  const auto w = simpson_weights(g.n(), g.dr());
  const auto dv = radial_derivative(g, s.v);
  WeakIntegrands out;
  for (std::size_t j = 1; j < g.size(); ++j) {
    const double r = g.r(j);
    if (std::abs(r - phi.r_c) >= phi.rho_r) continue;
    const double p = phi(s.t, r), pt = phi.dt(s.t, r), pr = phi.dr(s.t, r);
    const double u = s.v[j] / r;
    const double ru_r = dv[j] - u;  // r u_r
    out.lhs += w[j] * (s.vt[j] * pt * r - ru_r * r * pr);
    out.rhs -= w[j] * r * r * u * u * u * u * u * p;
    out.initial += w[j] * s.vt[j] * r * p;
  }
  const double c = 4.0 * std::numbers::pi;
  out.lhs *= c;
  out.rhs *= c;
  out.initial *= c;
  return out;
}

}  // namespace detail

/// Both sides of the weak identity by trapezoid-in-time over each segment's snapshots.
/// `segments` holds consecutive snapshot lists; the first list's first state is the initial time.
inline WeakSides weak_sides(const std::vector<std::vector<FieldState>>& segments, const TestFunction& phi) {
  if (segments.empty() || segments.front().empty()) throw std::invalid_argument("weak_residual: no snapshots");
  const double t0 = segments.front().front().t;
  const double t1 = segments.back().back().t;
  if (phi.t_max() > t1) throw std::invalid_argument("weak_residual: test function extends past the last snapshot");
  WeakSides out;
  for (const auto& seg : segments) {
    for (std::size_t k = 0; k < seg.size(); ++k) {
      const auto& s = seg[k];
      if (s.t > phi.t_min() && s.t < phi.t_max() && phi.r_max() > s.grid.r_max()) {
        throw std::invalid_argument("weak_residual: test function extends past the grid at t = " + std::to_string(s.t));
      }
    }
    for (std::size_t k = 0; k + 1 < seg.size(); ++k) {
      const double ta = seg[k].t, tb = seg[k + 1].t;
      if (tb <= phi.t_min() || ta >= phi.t_max()) continue;
      const auto a = detail::weak_integrands(seg[k], phi);
      const auto b = detail::weak_integrands(seg[k + 1], phi);
      out.lhs += 0.5 * (tb - ta) * (a.lhs + b.lhs);
      out.rhs += 0.5 * (tb - ta) * (a.rhs + b.rhs);
    }
  }
  if (phi.t_min() < t0) out.lhs += detail::weak_integrands(segments.front().front(), phi).initial;
  out.residual = std::abs(out.lhs - out.rhs) / std::max({std::abs(out.lhs), std::abs(out.rhs), 1.0});
  return out;
}

inline double weak_residual(const std::vector<std::vector<FieldState>>& segments, const TestFunction& phi) {
  return weak_sides(segments, phi).residual;
}

/// Every k-th stored snapshot of each segment, always keeping the segment's last one.
inline std::vector<std::vector<FieldState>> snapshot_segments(const CanonicalTrajectory& traj, std::size_t every = 1) {
  if (every == 0) throw std::invalid_argument("snapshot_segments: cadence must be >= 1");
  std::vector<std::vector<FieldState>> segs;
  for (const auto& h : traj.histories) {
    std::vector<FieldState> seg;
    for (std::size_t k = 0; k < h.snapshots.size(); k += every) seg.push_back(h.snapshots[k]);
    if (!h.snapshots.empty() && (h.snapshots.size() - 1) % every != 0) seg.push_back(h.snapshots.back());
    segs.push_back(std::move(seg));
  }
  return segs;
}

inline double weak_residual(const CanonicalTrajectory& traj, const TestFunction& phi, std::size_t every = 1) {
  return weak_residual(snapshot_segments(traj, every), phi);
}

}  // namespace nlw
