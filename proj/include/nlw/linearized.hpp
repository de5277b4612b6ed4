#pragma once

// The linearized operator L = -Delta - 5 W^4 on radial functions, written for
// the reduced profile p = r g as -p'' - 5 W^4 p with p(0) = p(r_max) = 0.
//
// Two independent routes to its single negative eigenvalue -k_d^2:
//   * symmetric tridiagonal discretization, Sturm-sequence bisection and
//     inverse iteration (ground_eigen),
//   * ODE shooting from both ends with Wronskian matching (shooting_eigen).

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nlw/grid.hpp"
#include "nlw/ground_state.hpp"

namespace nlw {

/// Unstable mode of L: eigenvalue -k_d^2, reduced eigenfunction p = r g_d.
struct EigenPair {
  double k_d = 0.0;
  RadialGrid grid;
  std::vector<double> p;  // p_0 = p_n = 0, positive in between, 4 pi sum dr p^2 = 1

  double eigenvalue() const { return -k_d * k_d; }
};

class UnresolvedGrid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double potential_5w4(double r) {
  const double w = eval_W(r);
  const double w2 = w * w;
  return 5.0 * w2 * w2;
}

inline std::vector<double> apply_linearized(const RadialGrid& g, std::span<const double> p) {
  if (p.size() != g.size()) throw std::invalid_argument("apply_linearized: length does not match grid");
  const double inv_h2 = 1.0 / (g.dr() * g.dr());
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t j = 1; j < g.n(); ++j) {
    out[j] = -(p[j + 1] - 2.0 * p[j] + p[j - 1]) * inv_h2 - potential_5w4(g.r(j)) * p[j];
  }
  return out;
}

/// Symmetric tridiagonal matrix: diag[i], off[i] couples i and i+1.
struct SymTridiagonal {
  std::vector<double> diag;
  std::vector<double> off;

  std::size_t size() const { return diag.size(); }

  /// Number of eigenvalues strictly below x (inertia of T - x I via the LDL^T pivots).
  std::size_t count_below(double x) const {
    std::size_t count = 0;
    double q = diag[0] - x;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < diag.size(); ++i) {
      if (q == 0.0) q = 1e-300;
      q = diag[i] - x - off[i - 1] * off[i - 1] / q;
      if (q < 0.0) ++count;
    }
    return count;
  }

  std::pair<double, double> gershgorin() const {
    double lo = diag[0], hi = diag[0];
    for (std::size_t i = 0; i < diag.size(); ++i) {
      double rad = 0.0;
      if (i > 0) rad += std::abs(off[i - 1]);
      if (i + 1 < diag.size()) rad += std::abs(off[i]);
      lo = std::min(lo, diag[i] - rad);
      hi = std::max(hi, diag[i] + rad);
    }
    return {lo, hi};
  }

  /// k-th smallest eigenvalue (k = 0 is the smallest) by bisection.
  double eigenvalue(std::size_t k) const {
    auto [lo, hi] = gershgorin();
    for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (count_below(mid) > k) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  /// Solve (T - shift I) x = b with the Thomas algorithm.
  std::vector<double> solve_shifted(double shift, std::vector<double> b) const {
    const std::size_t m = diag.size();
    std::vector<double> c(m, 0.0);
    double denom = diag[0] - shift;
    if (denom == 0.0) denom = 1e-300;
    c[0] = m > 1 ? off[0] / denom : 0.0;
    b[0] /= denom;
    for (std::size_t i = 1; i < m; ++i) {
      denom = diag[i] - shift - off[i - 1] * c[i - 1];
      if (denom == 0.0) denom = 1e-300;
      if (i + 1 < m) c[i] = off[i] / denom;
      b[i] = (b[i] - off[i - 1] * b[i - 1]) / denom;
    }
    for (std::size_t i = m - 1; i-- > 0;) b[i] -= c[i] * b[i + 1];
    return b;
  }
};

/// Interior (j = 1..n-1) matrix of the discretized operator.
inline SymTridiagonal linearized_matrix(const RadialGrid& g) {
  const double inv_h2 = 1.0 / (g.dr() * g.dr());
  SymTridiagonal t;
  t.diag.resize(g.n() - 1);
  t.off.assign(g.n() - 2, -inv_h2);
  for (std::size_t j = 1; j < g.n(); ++j) t.diag[j - 1] = 2.0 * inv_h2 - potential_5w4(g.r(j));
  return t;
}

/// Number of negative eigenvalues of the discretized operator.
inline std::size_t negative_eigenvalue_count(const RadialGrid& g) {
  return linearized_matrix(g).count_below(0.0);
}

/// 4 pi int p q dr over the grid (trapezoid; endpoints carry p = 0).
inline double reduced_inner(const RadialGrid& g, std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double w = (j == 0 || j == g.n()) ? 0.5 : 1.0;
    s += w * p[j] * q[j];
  }
  return 4.0 * std::numbers::pi * g.dr() * s;
}

inline EigenPair ground_eigen(const RadialGrid& g) {
  if (g.dr() > 1e-2 || g.r_max() < 40.0) {
    throw std::invalid_argument("ground_eigen: grid must have dr <= 1e-2 and r_max >= 40");
  }
  const auto t = linearized_matrix(g);
  const double mu = t.eigenvalue(0);
  if (!(mu < 0.0)) throw UnresolvedGrid("ground_eigen: smallest eigenvalue is not negative");

  // Inverse iteration; the shift sits just below mu so the solve stays nonsingular.
  const double shift = mu - 1e-10 * std::max(1.0, std::abs(mu));
  std::vector<double> x(t.size(), 1.0);
  for (int it = 0; it < 6; ++it) {
    x = t.solve_shifted(shift, x);
    double norm = 0.0;
    for (double xi : x) norm += xi * xi;
    norm = std::sqrt(norm);
    for (double& xi : x) xi /= norm;
  }

  EigenPair e;
  e.k_d = std::sqrt(-mu);
  e.grid = g;
  e.p.assign(g.size(), 0.0);
  for (std::size_t j = 1; j < g.n(); ++j) e.p[j] = x[j - 1];
  double sum = 0.0;
  for (double pj : e.p) sum += pj;
  const double sign = sum < 0.0 ? -1.0 : 1.0;
  const double scale = sign / std::sqrt(reduced_inner(g, e.p, e.p));
  for (double& pj : e.p) pj *= scale;
  return e;
}

/// Richardson extrapolation of a second-order quantity from spacings h and h/2.
inline double richardson2(double coarse, double fine) { return (4.0 * fine - coarse) / 3.0; }

/// k_d from the tridiagonal route on n and 2n intervals, eigenvalue extrapolated in dr^2.
struct ExtrapolatedKd {
  double k_coarse = 0.0;
  double k_fine = 0.0;
  double k_extrapolated = 0.0;
};

inline ExtrapolatedKd extrapolated_kd(double r_max, std::size_t n) {
  const auto coarse = ground_eigen(RadialGrid(n, r_max));
  const auto fine = ground_eigen(RadialGrid(2 * n, r_max));
  ExtrapolatedKd out;
  out.k_coarse = coarse.k_d;
  out.k_fine = fine.k_d;
  out.k_extrapolated = std::sqrt(-richardson2(coarse.eigenvalue(), fine.eigenvalue()));
  return out;
}

namespace detail {

// RK4 for p'' = (k^2 - 5 W^4) p from r0 to r1 (either direction) in `steps` steps.
// Returns (p, p') at r1; rescales to avoid overflow without changing the ratio.
inline std::pair<double, double> shoot(double k, double r0, double r1, double p, double dp, std::size_t steps,
                                       std::vector<double>* trace = nullptr) {
  const double h = (r1 - r0) / static_cast<double>(steps);
  const double k2 = k * k;
  auto acc = [&](double r, double y) { return (k2 - potential_5w4(r)) * y; };
  double r = r0;
  if (trace) trace->push_back(p);
  for (std::size_t i = 0; i < steps; ++i) {
    const double a1 = dp, b1 = acc(r, p);
    const double a2 = dp + 0.5 * h * b1, b2 = acc(r + 0.5 * h, p + 0.5 * h * a1);
    const double a3 = dp + 0.5 * h * b2, b3 = acc(r + 0.5 * h, p + 0.5 * h * a2);
    const double a4 = dp + h * b3, b4 = acc(r + h, p + h * a3);
    p += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
    dp += h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4);
    r = r0 + static_cast<double>(i + 1) * h;
    if (!trace && std::abs(p) > 1e100) {
      p *= 1e-100;
      dp *= 1e-100;
    }
    if (trace) trace->push_back(p);
  }
  return {p, dp};
}

struct ShootingSetup {
  double r_max;
  double r_match;
  double step;
};

// Wronskian of the regular solution (from 0) and the decaying solution (from r_max) at r_match.
inline double matching_function(double k, const ShootingSetup& s) {
  const auto n_out = static_cast<std::size_t>(std::ceil(s.r_match / s.step));
  const auto n_in = static_cast<std::size_t>(std::ceil((s.r_max - s.r_match) / s.step));
  auto [po, dpo] = shoot(k, 0.0, s.r_match, 0.0, 1.0, n_out);
  auto [pi, dpi] = shoot(k, s.r_max, s.r_match, 1.0, -k, n_in);
  const double no = std::hypot(po, dpo), ni = std::hypot(pi, dpi);
  return (po / no) * (dpi / ni) - (dpo / no) * (pi / ni);
}

}  // namespace detail

struct ShootingResult {
  double k_d = 0.0;
  std::vector<double> r;
  std::vector<double> p;  // positive, 4 pi int p^2 dr = 1 (trapezoid)
};

/// k_d by bisection on the Wronskian matching function over k in (1e-3, 10).
inline double shooting_eigen(double r_max, double tol, double step = 1e-3) {
  if (!(tol > 0.0)) throw std::invalid_argument("shooting_eigen: tol must be positive");
  const detail::ShootingSetup setup{r_max, 2.0, step};
  double lo = 1e-3, hi = 10.0;
  double f_lo = detail::matching_function(lo, setup);
  const double f_hi = detail::matching_function(hi, setup);
  if ((f_lo < 0.0) == (f_hi < 0.0)) {
    throw std::runtime_error("shooting_eigen: no sign change of the matching function in (1e-3, 10)");
  }
  while (hi - lo > tol * lo) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = detail::matching_function(mid, setup);
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Shooting eigenfunction sampled every `step` on [0, r_max], glued at the matching radius.
inline ShootingResult shooting_profile(double r_max, double k, double step = 1e-3, double r_match = 2.0) {
  const auto n_out = static_cast<std::size_t>(std::llround(r_match / step));
  const auto n_in = static_cast<std::size_t>(std::llround((r_max - r_match) / step));
  std::vector<double> out, in;
  detail::shoot(k, 0.0, r_match, 0.0, 1.0, n_out, &out);
  detail::shoot(k, r_max, r_match, 1.0, -k, n_in, &in);
  const double scale = out.back() / in.back();
  ShootingResult res;
  res.k_d = k;
  const double h_out = r_match / static_cast<double>(n_out);
  const double h_in = (r_max - r_match) / static_cast<double>(n_in);
  for (std::size_t i = 0; i < out.size(); ++i) {
    res.r.push_back(static_cast<double>(i) * h_out);
    res.p.push_back(out[i]);
  }
  for (std::size_t i = in.size() - 1; i-- > 0;) {
    res.r.push_back(r_max - static_cast<double>(i) * h_in);
    res.p.push_back(in[i] * scale);
  }
  const double norm = std::sqrt(4.0 * std::numbers::pi * [&] {
    std::vector<double> sq(res.p.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = res.p[i] * res.p[i];
    return trapezoid(res.r, sq);
  }());
  const double sign = res.p[res.p.size() / 2] < 0 ? -1.0 : 1.0;
  for (double& x : res.p) x *= sign / norm;
  return res;
}

/// Slope of log p over [a, b] by least squares on the samples inside.
inline double log_slope(std::span<const double> r, std::span<const double> p, double a, double b) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] >= a && r[i] <= b && p[i] > 0.0) {
      x.push_back(r[i]);
      y.push_back(std::log(p[i]));
    }
  }
  return fit_line(x, y).slope;
}

/// <g_d, Lambda W> in L^2(R^3), the recorded orthogonality diagnostic.
inline double overlap_with_scaling_mode(const EigenPair& e) {
  std::vector<double> q(e.grid.size(), 0.0);
  for (std::size_t j = 0; j < q.size(); ++j) q[j] = e.grid.r(j) * eval_scaling_mode(e.grid.r(j));
  return reduced_inner(e.grid, e.p, q);
}

}  // namespace nlw
