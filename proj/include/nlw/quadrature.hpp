#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace nlw {

/// Composite Simpson weights for n (even) uniform intervals of width h.
inline std::vector<double> simpson_weights(std::size_t n, double h) {
  if (n < 2 || n % 2 != 0) {
    throw std::invalid_argument("simpson_weights: n must be even and >= 2");
  }
  std::vector<double> w(n + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    w[j] = (j == 0 || j == n) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    w[j] *= h / 3.0;
  }
  return w;
}

/// Composite Simpson rule for f on [a, b] with n (even) intervals.
template <class F>
double simpson(F&& f, double a, double b, std::size_t n) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t j = 1; j < n; ++j) {
    s += (j % 2 == 1 ? 4.0 : 2.0) * f(a + static_cast<double>(j) * h);
  }
  return s * h / 3.0;
}

/// Weighted sum sum_j w_j f_j, accumulated in index order.
inline double weighted_sum(std::span<const double> w, std::span<const double> f) {
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * f[j];
  return s;
}

/// Composite trapezoid over possibly non-uniform abscissae.
inline double trapezoid(std::span<const double> x, std::span<const double> f) {
  double s = 0.0;
  for (std::size_t j = 1; j < x.size(); ++j) {
    s += 0.5 * (x[j] - x[j - 1]) * (f[j] + f[j - 1]);
  }
  return s;
}

/// Least-squares line y = a + b x; returns {a, b, r2}.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit fit;
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 0.0;
  return fit;
}

/// Observed order of convergence from errors at h, h/2.
inline double observed_order(double e_coarse, double e_fine) {
  return std::log2(std::abs(e_coarse) / std::abs(e_fine));
}

/// Order from values at h, h/2, h/4 without a reference: a constant offset cancels.
inline double three_level_order(double f_h, double f_h2, double f_h4) {
  return std::log2(std::abs(f_h - f_h2) / std::abs(f_h2 - f_h4));
}

}  // namespace nlw
