#pragma once

// Energies, exterior energy, the cut-off virial functional y(t) = <w u, u>
// with w = chi(|x| / (t + tau)), and the convexity monitors built on it.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nlw/grid.hpp"
#include "nlw/ground_state.hpp"

namespace nlw {

/// C^2 quintic smoothstep: 1 on s <= 1, 0 on s >= 2.
inline double smoothstep(double s) {
  if (s <= 1.0) return 1.0;
  if (s >= 2.0) return 0.0;
  const double x = s - 1.0;
  return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

inline double smoothstep_d1(double s) {
  if (s <= 1.0 || s >= 2.0) return 0.0;
  const double x = s - 1.0;
  return -30.0 * x * x * (1.0 - x) * (1.0 - x);
}

inline double smoothstep_d2(double s) {
  if (s <= 1.0 || s >= 2.0) return 0.0;
  const double x = s - 1.0;
  return -60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
}

struct CutoffSpec {
  double tau = 1.0;

  explicit CutoffSpec(double t = 1.0) : tau(t) {
    if (!(tau > 0.0)) throw std::invalid_argument("CutoffSpec: tau must be positive");
  }
};

struct EnergyReport {
  double E = 0.0;
  double E_free = 0.0;
  double E_ext = 0.0;
  double sup_u = 0.0;
  double h1 = 0.0;
  double l2_ut = 0.0;
  double l6 = 0.0;
  /// Energy conserved exactly by the semi-discrete scheme (one-sided differences, nodal sums).
  double E_scheme = 0.0;
};

struct VirialSample {
  double t = 0.0;
  double y = 0.0;
  double ydot = 0.0;
  double yddot = 0.0;
};

namespace detail {

// int_{a}^{r_max} f dr for nodal samples f, fourth order; a need not be a node.
inline double integrate_from(const RadialGrid& g, const std::vector<double>& f, double a) {
  const double h = g.dr();
  const std::size_t n = g.n();
  if (a >= g.r_max()) return 0.0;
  if (a < 0.0) a = 0.0;
  auto js = static_cast<std::size_t>(std::ceil(a / h - 1e-12));
  if (js > n) js = n;
  double partial = 0.0;
  const double rs = g.r(js);
  if (rs > a && js > 0) {
    // Four-point Gauss-Legendre on [a, r_js] of the cubic interpolant of f.
    static constexpr std::array<double, 4> xg = {-0.8611363115940526, -0.3399810435848563,
                                                 0.3399810435848563, 0.8611363115940526};
    static constexpr std::array<double, 4> wg = {0.3478548451374538, 0.6521451548625461,
                                                 0.6521451548625461, 0.3478548451374538};
    for (std::size_t q = 0; q < 4; ++q) {
      const double r = 0.5 * (a + rs) + 0.5 * (rs - a) * xg[q];
      partial += wg[q] * lagrange_cubic(g, f, r);
    }
    partial *= 0.5 * (rs - a);
  }
  const std::size_t m = n - js;
  double body = 0.0;
  if (m == 0) {
    body = 0.0;
  } else if (m == 1) {
    body = 0.5 * h * (f[js] + f[n]);
  } else {
    std::size_t even = (m % 2 == 0) ? m : m - 3;
    for (std::size_t j = 0; j < even; j += 2) {
      body += h / 3.0 * (f[js + j] + 4.0 * f[js + j + 1] + f[js + j + 2]);
    }
    if (even != m) {
      const std::size_t j = js + even;
      body += 3.0 * h / 8.0 * (f[j] + 3.0 * f[j + 1] + 3.0 * f[j + 2] + f[j + 3]);
    }
  }
  return partial + body;
}

}  // namespace detail

/// int_{|x| > t + tau} (u_t^2 + |grad u|^2) dx.
inline double ext_energy(const FieldState& s, const CutoffSpec& c, Tail tail = Tail::none) {
  const auto& g = s.grid;
  const auto grad = gradient_density(s);
  std::vector<double> f(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) f[j] = s.vt[j] * s.vt[j] + grad[j];
  double out = 4.0 * std::numbers::pi * detail::integrate_from(g, f, s.t + c.tau);
  if (tail == Tail::asymptotic) {
    const double R = std::max(g.r_max(), s.t + c.tau);
    out += detail::tail_gradient(detail::fit_tail(s), R);
  }
  return out;
}

/// The semi-discrete energy of the evolution scheme (second-order differences, Dirichlet origin).
inline double scheme_energy(const FieldState& s) {
  const auto& g = s.grid;
  const double h = g.dr();
  double kin = 0.0, grad = 0.0, pot = 0.0;
  for (std::size_t j = 1; j < g.n(); ++j) {
    kin += s.vt[j] * s.vt[j];
    const double u = s.v[j] / g.r(j);
    const double u2 = u * u;
    pot += g.r(j) * g.r(j) * u2 * u2 * u2;
  }
  for (std::size_t j = 0; j < g.n(); ++j) {
    const double d = (s.v[j + 1] - s.v[j]) / h;
    grad += d * d;
  }
  return 4.0 * std::numbers::pi * h * (0.5 * kin + 0.5 * grad - pot / 6.0);
}

inline EnergyReport energy(const FieldState& s, std::optional<CutoffSpec> cutoff = std::nullopt,
                           Tail tail = Tail::none) {
  const auto nm = norms(s, tail);
  EnergyReport e;
  e.E_free = 0.5 * (nm.kinetic + nm.gradient);
  e.E = e.E_free - nm.sextic / 6.0;
  e.sup_u = nm.sup_of_u;
  e.h1 = nm.h1_of_u;
  e.l2_ut = nm.l2_of_ut;
  e.l6 = nm.l6_of_u;
  e.E_ext = cutoff ? ext_energy(s, *cutoff, tail) : 0.0;
  e.E_scheme = scheme_energy(s);
  return e;
}

inline VirialSample virial(const FieldState& s, const CutoffSpec& c) {
  const auto& g = s.grid;
  const auto w = simpson_weights(g.n(), g.dr());
  const auto dv = radial_derivative(g, s.v);
  const double L = s.t + c.tau;
  double y = 0.0, yd = 0.0, ydd = 0.0;
  for (std::size_t j = 1; j < g.size(); ++j) {
    const double r = g.r(j);
    const double sj = r / L;
    const double chi = smoothstep(sj), chi1 = smoothstep_d1(sj), chi2 = smoothstep_d2(sj);
    const double w_t = -chi1 * sj / L;
    const double w_tt = (chi2 * sj * sj + 2.0 * chi1 * sj) / (L * L);
    const double w_r = chi1 / L;
    const double v = s.v[j], vt = s.vt[j];
    const double ur = dv[j] - v / r;  // r u_r
    const double u = v / r;
    const double u2 = u * u;
    const double sext = r * r * u2 * u2 * u2;
    y += w[j] * chi * v * v;
    yd += w[j] * (w_t * v * v + 2.0 * chi * v * vt);
    ydd += w[j] * (2.0 * chi * (vt * vt - ur * ur + sext) + w_tt * v * v + 4.0 * w_t * v * vt -
                   2.0 * w_r * v * ur);
  }
  const double four_pi = 4.0 * std::numbers::pi;
  return {s.t, four_pi * y, four_pi * yd, four_pi * ydd};
}

struct ConvexityReport {
  bool kinetic_bound = false;  // yddot >= 8 ||u_t||^2 + eps_star
  double slack1 = 0.0;
  bool ratio_applicable = false;
  bool ratio_bound = false;  // yddot >= (3/2) ydot^2 / y + eps_star / 2
  double slack2 = 0.0;
};

inline ConvexityReport convexity_monitor(const VirialSample& v, const EnergyReport& e, double eps_star) {
  if (!(eps_star > 0.0)) throw std::invalid_argument("convexity_monitor: eps_star must be positive");
  ConvexityReport c;
  c.slack1 = v.yddot - (8.0 * e.l2_ut * e.l2_ut + eps_star);
  c.kinetic_bound = c.slack1 >= 0.0;
  if (v.y > 0.0) {
    c.ratio_applicable = true;
    c.slack2 = v.yddot - (1.5 * v.ydot * v.ydot / v.y + 0.5 * eps_star);
    c.ratio_bound = c.slack2 >= 0.0;
  }
  return c;
}

/// Residuals of yddot against the two closed forms 2(4K + cG - 6E), c in {4, 2}, without exterior terms.
struct VirialClosedForms {
  double residual_coeff4 = 0.0;
  double residual_coeff2 = 0.0;
};

inline VirialClosedForms virial_closed_forms(const VirialSample& v, const EnergyReport& e) {
  const double K = e.l2_ut * e.l2_ut;
  const double G = e.h1 * e.h1;
  return {v.yddot - 2.0 * (4.0 * K + 4.0 * G - 6.0 * e.E), v.yddot - 2.0 * (4.0 * K + 2.0 * G - 6.0 * e.E)};
}

/// One diagnostics record; column order is the CSV order.
struct DiagnosticsRow {
  double t, E, E_free, E_ext, sup_u, h1, l2_ut, y, ydot, yddot, slack1, slack2, lambda_fit;
};

inline constexpr const char* diagnostics_csv_header =
    "t,E,E_free,E_ext,sup_u,h1,l2_ut,y,ydot,yddot,slack1,slack2,lambda_fit";

/// Energies include the fitted tail beyond r_max.
inline DiagnosticsRow diagnostics_row(const FieldState& s, const CutoffSpec& c, double eps_star) {
  const auto e = energy(s, c, Tail::asymptotic);
  const auto v = virial(s, c);
  const auto m = convexity_monitor(v, e, eps_star);
  return {s.t, e.E, e.E_free, e.E_ext, e.sup_u, e.h1, e.l2_ut, v.y, v.ydot, v.yddot,
          m.slack1, m.slack2, concentration_scale(s)};
}

}  // namespace nlw
