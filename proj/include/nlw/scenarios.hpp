#pragma once

// Initial-data families.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "nlw/diagnostics.hpp"
#include "nlw/grid.hpp"
#include "nlw/ground_state.hpp"
#include "nlw/linearized.hpp"

namespace nlw {

/// Amplitude constant of the ODE blow-up u = A (T - t)^{-1/2} of u'' = u^5.
inline const double ode_amplitude = std::pow(0.75, 0.25);

/// Exact spatially homogeneous solution.
inline double ode_solution(double T, double t) { return ode_amplitude / std::sqrt(T - t); }

/// C-infinity bump exp(1 - 1/(1 - x^2)) on |x| < 1, equal to 1 at x = 0.
inline double smooth_bump(double x) {
  if (std::abs(x) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - x * x));
}

/// Annular bump of height amplitude centred at center with half-width width.
struct BumpSpec {
  double amplitude = 0.0;
  double center = 0.0;
  double width = 1.0;

  double operator()(double r) const { return amplitude * smooth_bump((r - center) / width); }
  double outer_radius() const { return center + width; }
};

struct TruncatedODE {
  double T = 1.0;
};
struct ScaledGround {
  double c = 1.0;
};
struct ThresholdPerturbation {
  double delta = 0.0;
};
struct SyntheticBubbles {
  std::vector<SolitonProfile> profiles;
  BumpSpec residual;
};
struct SmallBump {
  double amplitude = 1e-3;
  double width = 1.0;
};

using Scenario = std::variant<TruncatedODE, ScaledGround, ThresholdPerturbation, SyntheticBubbles, SmallBump>;

inline std::string scenario_name(const Scenario& s) {
  struct {
    std::string operator()(const TruncatedODE&) const { return "truncated_ode"; }
    std::string operator()(const ScaledGround&) const { return "scaled_ground"; }
    std::string operator()(const ThresholdPerturbation&) const { return "threshold_perturbation"; }
    std::string operator()(const SyntheticBubbles&) const { return "synthetic_bubbles"; }
    std::string operator()(const SmallBump&) const { return "small_bump"; }
  } v;
  return std::visit(v, s);
}

/// Smoothstep truncation equal to 1 on r <= 2T and 0 on r >= 3T.
inline double cone_truncation(double T, double r) { return smoothstep(r / T - 1.0); }

inline FieldState make_truncated_ode(double T, const RadialGrid& g) {
  if (!(T > 0.0)) throw std::invalid_argument("make_truncated_ode: T must be positive");
  if (3.0 * T >= 0.5 * g.r_max()) throw std::invalid_argument("make_truncated_ode: support 3T must lie inside r_max/2");
  const double u0 = ode_amplitude / std::sqrt(T);
  const double ut0 = std::pow(3.0 / 64.0, 0.25) / (T * std::sqrt(T));
  return sample_state(
      g, [&](double r) { return cone_truncation(T, r) * u0; }, [&](double r) { return cone_truncation(T, r) * ut0; });
}

inline FieldState make_scaled_ground(double c, const RadialGrid& g) {
  if (!(c > 0.0)) throw std::invalid_argument("make_scaled_ground: c must be positive");
  return sample_state(g, [&](double r) { return c * eval_W(r); }, nullptr);
}

/// (W + delta g_d, 0); g_d is resampled when the eigen grid differs and vanishes beyond its domain.
inline FieldState make_threshold_perturbation(double delta, const RadialGrid& g, const std::optional<EigenPair>& eigen) {
  if (!eigen) throw std::invalid_argument("make_threshold_perturbation: eigen data required");
  if (!(std::abs(delta) <= 0.1)) throw std::invalid_argument("make_threshold_perturbation: |delta| must be <= 0.1");
  FieldState s(0.0, g);
  const auto& eg = eigen->grid;
  for (std::size_t j = 1; j < g.size(); ++j) {
    const double r = g.r(j);
    double p = 0.0;
    if (eg == g) {
      p = eigen->p[j];
    } else if (r <= eg.r_max()) {
      p = detail::lagrange_cubic(eg, eigen->p, r);
    }
    s.v[j] = r * eval_W(r) + delta * p;
  }
  return s;
}

inline FieldState make_synthetic_bubbles(const SyntheticBubbles& sc, const RadialGrid& g) {
  if (sc.residual.amplitude != 0.0 && sc.residual.outer_radius() > 0.5 * g.r_max()) {
    throw std::invalid_argument("make_synthetic_bubbles: residual support must lie inside r_max/2");
  }
  return sample_state(
      g,
      [&](double r) {
        double u = sc.residual(r);
        for (const auto& p : sc.profiles) u += eval_W_lambda(p, r);
        return u;
      },
      nullptr);
}

/// amplitude * smooth_bump(r / width): centred at the origin, supported in r < width.
inline FieldState make_small_bump(double amplitude, double width, const RadialGrid& g) {
  if (!(width > 0.0)) throw std::invalid_argument("make_small_bump: width must be positive");
  if (width > 0.5 * g.r_max()) throw std::invalid_argument("make_small_bump: support must lie inside r_max/2");
  return sample_state(g, [&](double r) { return amplitude * smooth_bump(r / width); }, nullptr);
}

inline FieldState make_initial(const Scenario& sc, const RadialGrid& g, const std::optional<EigenPair>& eigen = std::nullopt) {
  struct {
    const RadialGrid& g;
    const std::optional<EigenPair>& e;
    FieldState operator()(const TruncatedODE& s) const { return make_truncated_ode(s.T, g); }
    FieldState operator()(const ScaledGround& s) const { return make_scaled_ground(s.c, g); }
    FieldState operator()(const ThresholdPerturbation& s) const { return make_threshold_perturbation(s.delta, g, e); }
    FieldState operator()(const SyntheticBubbles& s) const { return make_synthetic_bubbles(s, g); }
    FieldState operator()(const SmallBump& s) const { return make_small_bump(s.amplitude, s.width, g); }
  } v{g, eigen};
  return std::visit(v, sc);
}

}  // namespace nlw
