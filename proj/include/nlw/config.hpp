#pragma once

// Run configuration: the documented key set, strict parsing, canonical text.

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "nlw/classifier.hpp"
#include "nlw/continuation.hpp"
#include "nlw/io.hpp"
#include "nlw/scenarios.hpp"

namespace nlw {

struct RunConfig {
  std::string scenario = "scaled_ground";
  double T = 1.0;
  double c = 1.2;
  double delta = 0.01;
  double amplitude = 1e-3;
  double width = 1.0;
  std::string bubbles;  // "kappa:lambda, kappa:lambda"
  double residual_amplitude = 0.0;
  double residual_center = 0.0;
  double residual_width = 1.0;

  std::size_t grid_n = 4096;
  double grid_r_max = 40.0;

  EvolveConfig evolve{.cfl = 0.5, .u_stop = 1e3, .t_horizon = 10.0, .refine_trigger = 0.1,
                      .max_refinements = 24, .nonlinear_dt = 0.02, .refine_min_sup = 4.0,
                      .sample_every = 10, .snapshot_every = 0};
  double tau = 1.0;
  double eps_star = 1e-2;
  ClassifierConfig classifier;
  std::size_t max_segments = 8;
  double ledger_tol = 0.01;
  double staging_time = std::numeric_limits<double>::quiet_NaN();
  std::string staging_bubbles;
  std::string output_dir = "out";
};

struct KeySpec {
  std::string key;
  std::string doc;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
  }
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
  const long long x = parse_int(key, v);
  if (x < 0) throw ConfigError("config key '" + key + "': must be >= 0");
  return static_cast<std::size_t>(x);
}

#define NLW_REAL(k, field, text)                                                     \
  KeySpec {                                                                          \
    k, text, [](RunConfig& c, const std::string& v) { c.field = parse_double(k, v); }, \
        [](const RunConfig& c) { return fmt(c.field); }                              \
  }
#define NLW_COUNT(k, field, text)                                                   \
  KeySpec {                                                                         \
    k, text, [](RunConfig& c, const std::string& v) { c.field = parse_count(k, v); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }                  \
  }
#define NLW_TEXT(k, field, text)                                                       \
  KeySpec {                                                                            \
    k, text, [](RunConfig& c, const std::string& v) { c.field = v; },                  \
        [](const RunConfig& c) { return c.field; }                                     \
  }

}  // namespace detail

/// Every accepted key, in canonical order.
inline const std::vector<KeySpec>& config_keys() {
  using namespace detail;
  static const std::vector<KeySpec> keys = {
      NLW_TEXT("scenario.name", scenario,
               "truncated_ode | scaled_ground | threshold_perturbation | synthetic_bubbles | small_bump"),
      NLW_REAL("scenario.T", T, "blow-up time of the truncated ODE data"),
      NLW_REAL("scenario.c", c, "multiple of W for scaled_ground"),
      NLW_REAL("scenario.delta", delta, "coefficient of g_d for threshold_perturbation"),
      NLW_REAL("scenario.amplitude", amplitude, "small_bump height"),
      NLW_REAL("scenario.width", width, "small_bump support radius"),
      NLW_TEXT("scenario.bubbles", bubbles, "synthetic_bubbles list 'kappa:lambda, ...'"),
      NLW_REAL("scenario.residual_amplitude", residual_amplitude, "synthetic_bubbles annular bump height"),
      NLW_REAL("scenario.residual_center", residual_center, "synthetic_bubbles annular bump centre"),
      NLW_REAL("scenario.residual_width", residual_width, "synthetic_bubbles annular bump half-width"),
      NLW_COUNT("grid.n", grid_n, "number of intervals (even, >= 16)"),
      NLW_REAL("grid.r_max", grid_r_max, "outer radius"),
      NLW_REAL("evolve.cfl", evolve.cfl, "dt = cfl * dr, in (0, 1]"),
      NLW_REAL("evolve.u_stop", evolve.u_stop, "stop when sup|u| reaches this"),
      NLW_REAL("evolve.t_horizon", evolve.t_horizon, "final time"),
      NLW_REAL("evolve.refine_trigger", evolve.refine_trigger, "zoom when lambda_fit * dr exceeds this"),
      KeySpec{"evolve.max_refinements", "zoom budget",
              [](RunConfig& c, const std::string& v) {
                c.evolve.max_refinements = static_cast<int>(parse_int("evolve.max_refinements", v));
              },
              [](const RunConfig& c) { return std::to_string(c.evolve.max_refinements); }},
      NLW_REAL("evolve.nonlinear_dt", evolve.nonlinear_dt, "dt <= nonlinear_dt / sup|u|^2"),
      NLW_REAL("evolve.refine_min_sup", evolve.refine_min_sup, "no zoom below this sup|u|"),
      NLW_COUNT("evolve.sample_every", evolve.sample_every, "steps between diagnostics rows"),
      NLW_COUNT("snapshot.cadence", evolve.snapshot_every, "diagnostics rows between stored snapshots; 0 keeps first and last"),
      NLW_REAL("cutoff.tau", tau, "cone offset of the virial cutoff"),
      NLW_REAL("monitor.eps_star", eps_star, "margin in the convexity monitors"),
      NLW_REAL("classifier.growth_factor", classifier.growth_factor, "free-energy ratio separating type I"),
      NLW_REAL("classifier.quality_min", classifier.quality_min, "minimum R^2 of the rate fit"),
      NLW_REAL("classifier.fit_sup_floor", classifier.fit_sup_floor, "rate fit uses samples above this sup|u|"),
      NLW_COUNT("classifier.min_fit_samples", classifier.min_fit_samples, "minimum samples in the rate fit"),
      NLW_REAL("extract.core_threshold", classifier.extract.core_threshold, "bubble search continues while sup|u| over r_core exceeds this"),
      NLW_REAL("extract.sep_ratio", classifier.extract.sep_ratio, "minimum ratio of consecutive scales"),
      NLW_REAL("extract.r_core", classifier.extract.r_core, "core radius; 0 selects r_max/4"),
      KeySpec{"extract.max_bubbles", "extraction limit",
              [](RunConfig& c, const std::string& v) {
                c.classifier.extract.max_bubbles = static_cast<int>(parse_int("extract.max_bubbles", v));
              },
              [](const RunConfig& c) { return std::to_string(c.classifier.extract.max_bubbles); }},
      NLW_COUNT("continuation.max_segments", max_segments, "segment cap"),
      NLW_REAL("continuation.ledger_tol", ledger_tol, "ledger tolerance in units of E(W)"),
      NLW_REAL("continuation.staging_time", staging_time, "fixture: inject staging_bubbles into segment 0 at this time (nan = off)"),
      NLW_TEXT("continuation.staging_bubbles", staging_bubbles, "fixture bubbles 'kappa:lambda, ...'"),
      NLW_TEXT("output.dir", output_dir, "output directory"),
  };
  return keys;
}

#undef NLW_REAL
#undef NLW_COUNT
#undef NLW_TEXT

inline std::vector<SolitonProfile> parse_profiles(const std::string& key, const std::string& text) {
  std::vector<SolitonProfile> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("config key '" + key + "': expected kappa:lambda, got '" + item + "'");
    const auto kappa = detail::parse_int(key, trim(item.substr(0, colon)));
    const double lambda = detail::parse_double(key, trim(item.substr(colon + 1)));
    try {
      out.emplace_back(static_cast<int>(kappa), lambda);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  return out;
}

/// Strict: any key outside config_keys() aborts.
inline RunConfig config_from(const KeyValues& kv) {
  RunConfig c;
  for (const auto& [k, v] : kv) {
    bool found = false;
    for (const auto& spec : config_keys()) {
      if (spec.key == k) {
        spec.set(c, v);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown config key '" + k + "'");
  }
  try {
    (void)RadialGrid(c.grid_n, c.grid_r_max);
    c.evolve.validate();
    c.classifier.validate();
    (void)CutoffSpec(c.tau);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(c.eps_star > 0.0)) throw ConfigError("monitor.eps_star must be positive");
  if (c.max_segments == 0) throw ConfigError("continuation.max_segments must be >= 1");
  (void)parse_profiles("scenario.bubbles", c.bubbles);
  (void)parse_profiles("continuation.staging_bubbles", c.staging_bubbles);
  if (!std::isnan(c.staging_time) && parse_profiles("continuation.staging_bubbles", c.staging_bubbles).empty()) {
    throw ConfigError("continuation.staging_time requires continuation.staging_bubbles");
  }
  return c;
}

/// Full key set with values, one "key = value" per line.
inline std::string canonical_text(const RunConfig& c) {
  std::string out;
  for (const auto& spec : config_keys()) out += spec.key + " = " + spec.get(c) + "\n";
  return out;
}

inline Scenario scenario_of(const RunConfig& c) {
  if (c.scenario == "truncated_ode") return TruncatedODE{c.T};
  if (c.scenario == "scaled_ground") return ScaledGround{c.c};
  if (c.scenario == "threshold_perturbation") return ThresholdPerturbation{c.delta};
  if (c.scenario == "synthetic_bubbles") {
    return SyntheticBubbles{parse_profiles("scenario.bubbles", c.bubbles),
                            BumpSpec{c.residual_amplitude, c.residual_center, c.residual_width}};
  }
  if (c.scenario == "small_bump") return SmallBump{c.amplitude, c.width};
  throw ConfigError("unknown scenario '" + c.scenario + "'");
}

}  // namespace nlw
