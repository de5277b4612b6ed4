#pragma once

// Greedy extraction of concentrated kappa W_lambda bubbles from a radial state.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlw/grid.hpp"
#include "nlw/ground_state.hpp"

namespace nlw {

struct ScaleFit {
  SolitonProfile profile;
  double misfit = 0.0;      // relative weighted L^2 error on the core window
  double background = 0.0;  // constant absorbed from coarser scales
};

struct ExtractConfig {
  double core_threshold = 2.0;
  double sep_ratio = 10.0;
  double r_core = 0.0;  // 0 selects a quarter of the domain
  int max_bubbles = 8;
  double window = 5.0;  // core window radius in units of 1/lambda

  void validate() const {
    if (!(core_threshold > 0.0)) throw std::invalid_argument("ExtractConfig: core_threshold must be positive");
    if (!(sep_ratio > 1.0)) throw std::invalid_argument("ExtractConfig: sep_ratio must exceed 1");
    if (r_core < 0.0) throw std::invalid_argument("ExtractConfig: r_core must be >= 0");
    if (max_bubbles < 1) throw std::invalid_argument("ExtractConfig: max_bubbles must be >= 1");
    if (!(window > 0.0)) throw std::invalid_argument("ExtractConfig: window must be positive");
  }
};

struct Decomposition {
  std::vector<SolitonProfile> profiles;  // increasing lambda
  FieldState residual;
  std::vector<double> fit_errors;
  std::size_t N = 0;
  bool truncated = false;  // extraction stopped on a failed fit or a scale-separation violation
  std::string note;
};

class RunawayExtraction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct CoreWindow {
  std::vector<double> r, s, w;  // nodes, kappa*u, weights (r^2 dr)
};

inline CoreWindow core_window(const FieldState& st, const std::vector<double>& u, int kappa, double radius) {
  CoreWindow cw;
  const auto& g = st.grid;
  const auto count = static_cast<std::size_t>(std::min(radius / g.dr(), static_cast<double>(g.n())));
  // Wide windows are thinned to a few thousand nodes; the misfit is a smooth functional of lambda.
  const std::size_t stride = std::max<std::size_t>(1, count / 4096);
  for (std::size_t j = 0; j <= count; j += stride) {
    const double r = g.r(j);
    cw.r.push_back(r);
    cw.s.push_back(kappa * u[j]);
    cw.w.push_back(r * r * g.dr() * static_cast<double>(stride));
  }
  return cw;
}

// Weighted least squares of s - W_lambda against a constant; returns (residual norm^2, constant).
inline std::pair<double, double> profiled_misfit(const CoreWindow& cw, double lambda) {
  const SolitonProfile p(1, lambda);
  double sw = 0.0, sd = 0.0;
  for (std::size_t j = 0; j < cw.r.size(); ++j) {
    sw += cw.w[j];
    sd += cw.w[j] * (cw.s[j] - eval_W_lambda(p, cw.r[j]));
  }
  const double c = sw > 0.0 ? sd / sw : 0.0;
  double e = 0.0;
  for (std::size_t j = 0; j < cw.r.size(); ++j) {
    const double d = cw.s[j] - eval_W_lambda(p, cw.r[j]) - c;
    e += cw.w[j] * d * d;
  }
  return {e, c};
}

}  // namespace detail

/// Best kappa W_lambda (plus constant) on the core window; nullopt when the minimum sits on the search boundary.
/// The core threshold is enforced by extract_all, so unit-height profiles such as -W can be fitted directly.
inline std::optional<ScaleFit> fit_scale(const FieldState& s, double window = 5.0) {
  const auto u = u_nodes(s);
  const double u0 = u[0];
  if (u0 == 0.0) return std::nullopt;
  const int kappa = u0 > 0.0 ? 1 : -1;
  const double lambda0 = u0 * u0;
  const auto cw = detail::core_window(s, u, kappa, window / lambda0);
  if (cw.r.size() < 8) return std::nullopt;

  const double lo = std::log(lambda0 / 4.0), hi = std::log(4.0 * lambda0);
  auto cost = [&](double x) { return detail::profiled_misfit(cw, std::exp(x)).first; };

  // Coarse scan, then golden section around the best sample.
  constexpr int scan = 48;
  int best = 0;
  double best_cost = cost(lo);
  for (int k = 1; k <= scan; ++k) {
    const double c = cost(lo + (hi - lo) * k / scan);
    if (c < best_cost) {
      best_cost = c;
      best = k;
    }
  }
  if (best == 0 || best == scan) return std::nullopt;
  double a = lo + (hi - lo) * (best - 1) / scan, b = lo + (hi - lo) * (best + 1) / scan;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = cost(x1), f2 = cost(x2);
  while (b - a > 1e-10) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = cost(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = cost(x2);
    }
  }
  const double lambda = std::exp(0.5 * (a + b));
  const auto [err, c] = detail::profiled_misfit(cw, lambda);
  double norm = 0.0;
  for (std::size_t j = 0; j < cw.r.size(); ++j) norm += cw.w[j] * cw.s[j] * cw.s[j];
  ScaleFit out;
  out.profile = SolitonProfile(kappa, lambda);
  out.misfit = norm > 0.0 ? std::sqrt(err / norm) : 0.0;
  out.background = kappa * c;
  return out;
}

/// v -> v - r kappa W_lambda on every node.
inline FieldState subtract_profile(const FieldState& s, const SolitonProfile& p) {
  FieldState out = s;
  for (std::size_t j = 1; j < s.grid.size(); ++j) {
    const double r = s.grid.r(j);
    out.v[j] = s.v[j] - r * eval_W_lambda(p, r);
  }
  return out;
}

inline Decomposition extract_all(const FieldState& s, const ExtractConfig& cfg = {}) {
  cfg.validate();
  s.validate();
  const double r_core = cfg.r_core > 0.0 ? cfg.r_core : 0.25 * s.grid.r_max();
  Decomposition d;
  d.residual = s;
  while (local_sup(d.residual, r_core) > cfg.core_threshold) {
    if (static_cast<int>(d.profiles.size()) >= cfg.max_bubbles) {
      throw RunawayExtraction("extract_all: more than max_bubbles extractions");
    }
    const auto fit = fit_scale(d.residual, cfg.window);
    if (!fit) {
      d.truncated = true;
      d.note = "no fit: minimum on the search boundary";
      break;
    }
    if (!d.profiles.empty() && d.profiles.back().lambda < cfg.sep_ratio * fit->profile.lambda) {
      d.truncated = true;
      d.note = "rejected: scale separation below sep_ratio";
      break;
    }
    d.profiles.push_back(fit->profile);
    d.fit_errors.push_back(fit->misfit);
    d.residual = subtract_profile(d.residual, fit->profile);
  }
  std::reverse(d.profiles.begin(), d.profiles.end());
  std::reverse(d.fit_errors.begin(), d.fit_errors.end());
  d.N = d.profiles.size();
  return d;
}

/// Input u reconstructed from the decomposition (bookkeeping check).
inline FieldState reconstruct(const Decomposition& d) {
  FieldState out = d.residual;
  for (const auto& p : d.profiles) {
    for (std::size_t j = 1; j < out.grid.size(); ++j) {
      const double r = out.grid.r(j);
      out.v[j] += r * eval_W_lambda(p, r);
    }
  }
  return out;
}

}  // namespace nlw
