#pragma once

// Finite-run proxies for the type I / type II dichotomy.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "nlw/evolution.hpp"
#include "nlw/linearized.hpp"
#include "nlw/profile.hpp"
#include "nlw/quadrature.hpp"

namespace nlw {

struct ClassifierConfig {
  double growth_factor = 10.0;
  double quality_min = 0.99;
  double fit_sup_floor = 10.0;  // samples entering the rate fit have sup|u| above this
  std::size_t min_fit_samples = 20;
  std::size_t lambda_window = 6;  // late snapshots used for scale tracking
  ExtractConfig extract;

  void validate() const {
    if (!(growth_factor > 1.0)) throw std::invalid_argument("ClassifierConfig: growth_factor must exceed 1");
    if (!(quality_min > 0.0 && quality_min <= 1.0)) throw std::invalid_argument("ClassifierConfig: quality_min must be in (0, 1]");
    if (!(fit_sup_floor > 0.0)) throw std::invalid_argument("ClassifierConfig: fit_sup_floor must be positive");
    if (min_fit_samples < 3) throw std::invalid_argument("ClassifierConfig: min_fit_samples must be >= 3");
    if (lambda_window < 3) throw std::invalid_argument("ClassifierConfig: lambda_window must be >= 3");
    extract.validate();
  }
};

struct RateFit {
  double T_est = 0.0;
  double amp_fit = 0.0;
  double fit_quality = 0.0;
};

class RateFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Line fit of sup|u|^{-2} against t over samples with sup|u| > floor; sup ~ A (T - t)^{-1/2}.
inline RateFit ode_rate_fit(const std::vector<RunSample>& samples, double floor = 10.0, std::size_t min_samples = 20) {
  std::vector<double> t, y;
  for (const auto& s : samples) {
    if (s.sup_u > floor) {
      t.push_back(s.t);
      y.push_back(1.0 / (s.sup_u * s.sup_u));
    }
  }
  if (t.size() < min_samples) {
    throw RateFitError("ode_rate_fit: " + std::to_string(t.size()) + " samples above the floor, need " +
                       std::to_string(min_samples));
  }
  const auto f = fit_line(t, y);
  if (!(f.slope < 0.0)) throw RateFitError("ode_rate_fit: sup|u|^-2 is not decreasing, no root ahead");
  RateFit out;
  out.T_est = -f.intercept / f.slope;
  out.amp_fit = 1.0 / std::sqrt(-f.slope);
  out.fit_quality = std::clamp(f.r2, 0.0, 1.0);
  return out;
}

/// <g_d, u - W> in the radial L^2 pairing; the state must live on the eigen grid.
inline double unstable_projection(const FieldState& s, const EigenPair& e) {
  if (!(s.grid == e.grid)) throw std::invalid_argument("unstable_projection: state and eigenvector grids differ");
  std::vector<double> dv(s.v.size());
  for (std::size_t j = 0; j < dv.size(); ++j) {
    const double r = s.grid.r(j);
    dv[j] = s.v[j] - r * eval_W(r);
  }
  return reduced_inner(s.grid, e.p, dv);
}

/// Slope of log|a(t)| over the samples with |a| in [lo, hi].
inline double exponential_rate(const std::vector<std::pair<double, double>>& series, double lo, double hi) {
  std::vector<double> t, y;
  for (const auto& [ti, a] : series) {
    if (std::abs(a) >= lo && std::abs(a) <= hi) {
      t.push_back(ti);
      y.push_back(std::log(std::abs(a)));
    }
  }
  if (t.size() < 3) throw RateFitError("exponential_rate: fewer than 3 samples in the window");
  return fit_line(t, y).slope;
}

struct GlobalToHorizon {};
struct TypeI {
  double T_est = 0.0;
  double amp_fit = 0.0;
  double fit_quality = 0.0;
};
struct TypeII {
  double T_est = 0.0;
  Decomposition decomposition;
};
struct Undetermined {
  std::string reason;
};

using BlowupVerdict = std::variant<GlobalToHorizon, TypeI, TypeII, Undetermined>;

inline std::string verdict_name(const BlowupVerdict& v) {
  switch (v.index()) {
    case 0: return "GlobalToHorizon";
    case 1: return "TypeI";
    case 2: return "TypeII";
    default: return "Undetermined";
  }
}

/// Scales lambda(t) from fit_scale on the late snapshots that carry a core.
inline std::vector<std::pair<double, double>> track_scales(const RunHistory& h, const ClassifierConfig& cfg) {
  std::vector<std::pair<double, double>> out;
  const std::size_t first = h.snapshots.size() > cfg.lambda_window ? h.snapshots.size() - cfg.lambda_window : 0;
  for (std::size_t k = first; k < h.snapshots.size(); ++k) {
    const auto& s = h.snapshots[k];
    if (std::abs(u_nodes(s)[0]) <= cfg.extract.core_threshold) continue;
    if (auto f = fit_scale(s, cfg.extract.window)) out.emplace_back(s.t, f->profile.lambda);
  }
  return out;
}

inline BlowupVerdict classify(const RunHistory& h, const ClassifierConfig& cfg = {}) {
  cfg.validate();
  if (h.samples.empty()) throw std::invalid_argument("classify: empty history");
  if (h.stop == StopReason::horizon) return GlobalToHorizon{};
  if (h.refinement_exhausted) return Undetermined{"refinement exhausted before the stop"};
  if (h.stop == StopReason::stalled) return Undetermined{"time step stalled"};

  const double ef0 = h.samples.front().e_free;
  const double ef1 = h.samples.back().e_free;
  const double ratio = ef0 > 0.0 ? ef1 / ef0 : INFINITY;
  std::optional<RateFit> fit;
  std::string fit_note;
  try {
    fit = ode_rate_fit(h.samples, cfg.fit_sup_floor, cfg.min_fit_samples);
  } catch (const RateFitError& e) {
    fit_note = e.what();
  }
  std::ostringstream ind;
  ind << "e_free ratio " << ratio;
  if (fit) {
    ind << ", fit quality " << fit->fit_quality << ", T_est " << fit->T_est;
  } else {
    ind << ", " << fit_note;
  }

  if (ratio >= cfg.growth_factor && fit && fit->fit_quality >= cfg.quality_min) {
    return TypeI{fit->T_est, fit->amp_fit, fit->fit_quality};
  }
  if (ratio < cfg.growth_factor) {
    const double t_end = h.samples.back().t;
    // Without a usable rate fit, extend the run by one sampling interval.
    const double t_prev = h.samples.size() > 1 ? h.samples[h.samples.size() - 2].t : t_end;
    const double T = (fit && fit->T_est > t_end) ? fit->T_est : t_end + (t_end - t_prev);
    const auto scales = track_scales(h, cfg);
    bool super = scales.size() >= 3;
    for (std::size_t k = 1; super && k < scales.size(); ++k) {
      const double a = scales[k - 1].second * (T - scales[k - 1].first);
      const double b = scales[k].second * (T - scales[k].first);
      if (!(b > a)) super = false;
    }
    if (super) {
      auto d = extract_all(h.final_state, cfg.extract);
      if (d.N >= 1) return TypeII{T, std::move(d)};
      ind << ", no bubble extracted";
    } else {
      ind << ", lambda (T - t) not increasing over " << scales.size() << " tracked snapshots";
    }
  }
  return Undetermined{ind.str()};
}

}  // namespace nlw
