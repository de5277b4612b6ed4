#pragma once

// Radial grid and field storage in the reduced variable v = r u.
//
// Nodes r_j = j dr, j = 0..n, n even. The origin node always carries v_0 = 0.
// Quadratures are composite Simpson in the 3-D radial measure 4 pi r^2 dr,
// rewritten in terms of v so that no 1/r factors appear in the weights.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlw/quadrature.hpp"

namespace nlw {

class RadialGrid {
 public:
  RadialGrid() = default;
  RadialGrid(std::size_t n, double r_max) : n_(n), r_max_(r_max) {
    if (n < 16) throw std::invalid_argument("RadialGrid: n must be >= 16");
    if (n % 2 != 0) throw std::invalid_argument("RadialGrid: n must be even (Simpson quadrature)");
    if (!(r_max > 0.0) || !std::isfinite(r_max)) throw std::invalid_argument("RadialGrid: r_max must be positive");
  }

  std::size_t n() const { return n_; }
  std::size_t size() const { return n_ + 1; }
  double r_max() const { return r_max_; }
  double dr() const { return r_max_ / static_cast<double>(n_); }
  double r(std::size_t j) const { return static_cast<double>(j) * dr(); }

  bool operator==(const RadialGrid&) const = default;

 private:
  std::size_t n_ = 16;
  double r_max_ = 1.0;
};

struct FieldState {
  double t = 0.0;
  RadialGrid grid;
  std::vector<double> v;   // r u
  std::vector<double> vt;  // r u_t

  FieldState() = default;
  FieldState(double time, RadialGrid g)
      : t(time), grid(g), v(g.size(), 0.0), vt(g.size(), 0.0) {}

  /// Throws if sizes disagree with the grid, the origin condition fails, or any entry is nonfinite.
  void validate() const {
    if (v.size() != grid.size() || vt.size() != grid.size()) {
      throw std::invalid_argument("FieldState: sample count does not match grid");
    }
    if (v[0] != 0.0 || vt[0] != 0.0) throw std::invalid_argument("FieldState: v(0) and vt(0) must vanish");
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (!std::isfinite(v[j]) || !std::isfinite(vt[j])) {
        throw std::invalid_argument("FieldState: nonfinite sample");
      }
    }
  }

  bool all_finite() const {
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (!std::isfinite(v[j]) || !std::isfinite(vt[j])) return false;
    }
    return true;
  }
};

/// Build a state from u(r) and u_t(r).
inline FieldState sample_state(const RadialGrid& g, const std::function<double(double)>& u,
                               const std::function<double(double)>& ut, double t = 0.0) {
  FieldState s(t, g);
  for (std::size_t j = 1; j < g.size(); ++j) {
    const double r = g.r(j);
    s.v[j] = r * u(r);
    s.vt[j] = ut ? r * ut(r) : 0.0;
  }
  return s;
}

/// Fourth-order first derivative of a reduced (odd-in-r) profile at every node.
inline std::vector<double> radial_derivative(const RadialGrid& g, std::span<const double> f) {
  const std::size_t n = g.n();
  const double h = g.dr();
  std::vector<double> d(n + 1);
  // Odd reflection supplies the ghosts f_{-k} = -f_k.
  d[0] = (8.0 * f[1] - f[2]) / (6.0 * h);
  d[1] = (-f[3] + 8.0 * f[2] - 8.0 * f[0] - f[1]) / (12.0 * h);
  for (std::size_t j = 2; j + 2 <= n; ++j) {
    d[j] = (-f[j + 2] + 8.0 * f[j + 1] - 8.0 * f[j - 1] + f[j - 2]) / (12.0 * h);
  }
  d[n - 1] = (-f[n - 4] + 6.0 * f[n - 3] - 18.0 * f[n - 2] + 10.0 * f[n - 1] + 3.0 * f[n]) / (12.0 * h);
  d[n] = (25.0 * f[n] - 48.0 * f[n - 1] + 36.0 * f[n - 2] - 16.0 * f[n - 3] + 3.0 * f[n - 4]) / (12.0 * h);
  return d;
}

/// u at the nodes; u_0 is the one-sided limit v'(0).
inline std::vector<double> u_nodes(const FieldState& s) {
  const auto& g = s.grid;
  std::vector<double> u(g.size());
  u[0] = (8.0 * s.v[1] - s.v[2]) / (6.0 * g.dr());
  for (std::size_t j = 1; j < g.size(); ++j) u[j] = s.v[j] / g.r(j);
  return u;
}

inline std::vector<double> ut_nodes(const FieldState& s) {
  const auto& g = s.grid;
  std::vector<double> u(g.size());
  u[0] = (8.0 * s.vt[1] - s.vt[2]) / (6.0 * g.dr());
  for (std::size_t j = 1; j < g.size(); ++j) u[j] = s.vt[j] / g.r(j);
  return u;
}

namespace detail {

// Cubic Lagrange interpolation of samples f on the uniform grid at r.
inline double lagrange_cubic(const RadialGrid& g, std::span<const double> f, double r) {
  const double h = g.dr();
  const std::size_t n = g.n();
  auto j = static_cast<std::size_t>(std::floor(r / h));
  if (j >= n) j = n - 1;
  std::size_t j0 = (j == 0) ? 0 : j - 1;
  if (j0 + 3 > n) j0 = n - 3;
  const double x = r / h - static_cast<double>(j0);
  const double l0 = -(x - 1) * (x - 2) * (x - 3) / 6.0;
  const double l1 = x * (x - 2) * (x - 3) / 2.0;
  const double l2 = -x * (x - 1) * (x - 3) / 2.0;
  const double l3 = x * (x - 1) * (x - 2) / 6.0;
  return l0 * f[j0] + l1 * f[j0 + 1] + l2 * f[j0 + 2] + l3 * f[j0 + 3];
}

}  // namespace detail

/// u(r) reconstructed from v; the origin value uses the one-sided stencil of v.
inline double u_at(const FieldState& s, double r) {
  const auto& g = s.grid;
  if (!(r >= 0.0) || r > g.r_max() * (1.0 + 1e-12)) {
    throw std::out_of_range("u_at: r outside [0, r_max]");
  }
  const double h = g.dr();
  const double u0 = (8.0 * s.v[1] - s.v[2]) / (6.0 * h);
  if (r < h) {
    const double u1 = s.v[1] / h;
    const double x = r / h;
    return u0 + (u1 - u0) * x * x;  // even in r
  }
  return detail::lagrange_cubic(g, s.v, std::min(r, g.r_max())) / r;
}

/// Treatment of the region beyond r_max in the norm quadratures.
enum class Tail {
  none,
  /// Fit v ~ A + B/r^2 on the outer quarter and integrate the model to infinity (static u_t tail).
  asymptotic
};

struct Norms {
  double l2_of_ut = 0.0;   // ||u_t||_2
  double h1_of_u = 0.0;    // ||grad u||_2
  double l6_of_u = 0.0;    // ||u||_6
  double sup_of_u = 0.0;   // max |u| over the nodes

  // Squared/raw integrals feeding the energies.
  double kinetic = 0.0;    // int u_t^2
  double gradient = 0.0;   // int |grad u|^2
  double sextic = 0.0;     // int u^6
};

namespace detail {

struct TailModel {
  double a = 0.0;
  double b = 0.0;
};

inline TailModel fit_tail(const FieldState& s) {
  const auto& g = s.grid;
  const std::size_t jb = g.n();
  const std::size_t ja = (3 * g.n()) / 4;
  const double ra = g.r(ja), rb = g.r(jb);
  const double va = s.v[ja], vb = s.v[jb];
  // v = A + B/r^2 through both points.
  const double ia = 1.0 / (ra * ra), ib = 1.0 / (rb * rb);
  TailModel m;
  m.b = (va - vb) / (ia - ib);
  m.a = vb - m.b * ib;
  return m;
}

inline double tail_gradient(const TailModel& m, double R) {
  return 4.0 * std::numbers::pi *
         (m.a * m.a / R + 2.0 * m.a * m.b / (R * R * R) + 9.0 * m.b * m.b / (5.0 * std::pow(R, 5)));
}

inline double tail_sextic(const TailModel& m, double R) {
  static constexpr double binom[7] = {1, 6, 15, 20, 15, 6, 1};
  double s = 0.0;
  for (int k = 0; k <= 6; ++k) {
    s += binom[k] * std::pow(m.a, 6 - k) * std::pow(m.b, k) * std::pow(R, -3.0 - 2.0 * k) / (3.0 + 2.0 * k);
  }
  return 4.0 * std::numbers::pi * s;
}

}  // namespace detail

/// Integrand r^2 |grad u|^2 = (v' - v/r)^2 at each node (0 at the origin).
inline std::vector<double> gradient_density(const FieldState& s) {
  const auto& g = s.grid;
  const auto dv = radial_derivative(g, s.v);
  std::vector<double> f(g.size(), 0.0);
  for (std::size_t j = 1; j < g.size(); ++j) {
    const double q = dv[j] - s.v[j] / g.r(j);
    f[j] = q * q;
  }
  return f;
}

/// Integrand r^2 u^6 = v^6/r^4 at each node (0 at the origin).
inline std::vector<double> sextic_density(const FieldState& s) {
  const auto& g = s.grid;
  std::vector<double> f(g.size(), 0.0);
  for (std::size_t j = 1; j < g.size(); ++j) {
    const double u = s.v[j] / g.r(j);
    const double u2 = u * u;
    f[j] = g.r(j) * g.r(j) * u2 * u2 * u2;
  }
  return f;
}

inline Norms norms(const FieldState& s, Tail tail = Tail::none) {
  const auto& g = s.grid;
  const auto w = simpson_weights(g.n(), g.dr());
  const double four_pi = 4.0 * std::numbers::pi;

  std::vector<double> kin(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) kin[j] = s.vt[j] * s.vt[j];

  Norms out;
  out.kinetic = four_pi * weighted_sum(w, kin);
  out.gradient = four_pi * weighted_sum(w, gradient_density(s));
  out.sextic = four_pi * weighted_sum(w, sextic_density(s));
  if (tail == Tail::asymptotic) {
    const auto m = detail::fit_tail(s);
    out.gradient += detail::tail_gradient(m, g.r_max());
    out.sextic += detail::tail_sextic(m, g.r_max());
  }
  out.l2_of_ut = std::sqrt(out.kinetic);
  out.h1_of_u = std::sqrt(out.gradient);
  out.l6_of_u = std::pow(out.sextic, 1.0 / 6.0);
  for (double u : u_nodes(s)) out.sup_of_u = std::max(out.sup_of_u, std::abs(u));
  return out;
}

/// sup |u| restricted to r <= r_lim.
inline double local_sup(const FieldState& s, double r_lim) {
  const auto u = u_nodes(s);
  double m = 0.0;
  for (std::size_t j = 0; j < u.size() && s.grid.r(j) <= r_lim; ++j) m = std::max(m, std::abs(u[j]));
  return m;
}

namespace detail {

// Monotone cubic Hermite interpolation of an odd reduced profile; derivative
// estimates are the fourth-order stencils, limited per interval (Fritsch-Carlson).
inline std::vector<double> hermite_resample(const RadialGrid& src, std::span<const double> f,
                                            const RadialGrid& dst) {
  const auto d = radial_derivative(src, f);
  const double h = src.dr();
  std::vector<double> out(dst.size(), 0.0);
  for (std::size_t k = 1; k < dst.size(); ++k) {
    const double r = dst.r(k);
    double x = r / h;
    auto j = static_cast<std::size_t>(std::floor(x));
    if (j >= src.n()) {
      j = src.n() - 1;
    }
    const double s = std::clamp(x - static_cast<double>(j), 0.0, 1.0);
    const double f0 = f[j], f1 = f[j + 1];
    double d0 = d[j] * h, d1 = d[j + 1] * h;  // in units of the interval
    const double delta = f1 - f0;
    if (delta == 0.0) {
      d0 = d1 = 0.0;
    } else {
      if (d0 * delta < 0.0) d0 = 0.0;
      if (d1 * delta < 0.0) d1 = 0.0;
      const double a = d0 / delta, b = d1 / delta;
      const double mag = a * a + b * b;
      if (mag > 9.0) {
        const double tau = 3.0 / std::sqrt(mag);
        d0 *= tau;
        d1 *= tau;
      }
    }
    const double s2 = s * s, s3 = s2 * s;
    out[k] = (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * f1 + (s3 - s2) * d1;
  }
  return out;
}

}  // namespace detail

/// Resample onto another grid covering at most the source domain.
inline FieldState regrid(const FieldState& s, const RadialGrid& g) {
  if (g == s.grid) return s;
  if (g.r_max() > s.grid.r_max() * (1.0 + 1e-12)) {
    throw std::invalid_argument("regrid: target grid extends beyond the source domain");
  }
  FieldState out(s.t, g);
  out.v = detail::hermite_resample(s.grid, s.v, g);
  out.vt = detail::hermite_resample(s.grid, s.vt, g);
  out.v[0] = 0.0;
  out.vt[0] = 0.0;
  return out;
}

/// Grid with the same node count on the inner half of the domain (dr halved).
inline RadialGrid zoom_grid(const RadialGrid& g) { return RadialGrid(g.n(), 0.5 * g.r_max()); }

/// Concentration scale lambda such that W_lambda has the same half-maximum radius as |u|;
/// 3 / r_max when the origin value is not at least half of sup|u|.
inline double concentration_scale(const FieldState& s) {
  const auto u = u_nodes(s);
  const double peak = std::abs(u[0]);
  const auto& g = s.grid;
  double sup = 0.0;
  for (double x : u) sup = std::max(sup, std::abs(x));
  // Only a profile peaked at the origin has a concentration scale.
  if (peak == 0.0 || peak < 0.5 * sup) return 3.0 / g.r_max();
  for (std::size_t j = 1; j < u.size(); ++j) {
    if (std::abs(u[j]) <= 0.5 * peak) {
      const double a = std::abs(u[j - 1]), b = std::abs(u[j]);
      const double x = (a - 0.5 * peak) / (a - b);
      const double r_half = g.r(j - 1) + x * g.dr();
      return 3.0 / r_half;  // W(3) = 1/2
    }
  }
  return 3.0 / g.r_max();
}

// ---- snapshot text format ---------------------------------------------------

inline void write_snapshot(std::ostream& os, const FieldState& s) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.17g %zu %.17g\n", s.t, s.grid.n(), s.grid.r_max());
  os << buf;
  for (std::size_t j = 0; j < s.grid.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", s.grid.r(j), s.v[j], s.vt[j]);
    os << buf;
  }
}

inline FieldState read_snapshot(std::istream& is) {
  double t = 0, r_max = 0;
  std::size_t n = 0;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("snapshot: missing header");
  {
    std::istringstream hs(line);
    if (!(hs >> t >> n >> r_max)) throw std::runtime_error("snapshot: malformed header");
  }
  FieldState s(t, RadialGrid(n, r_max));
  for (std::size_t j = 0; j <= n; ++j) {
    if (!std::getline(is, line)) throw std::runtime_error("snapshot: truncated body");
    std::istringstream ls(line);
    double r = 0;
    if (!(ls >> r >> s.v[j] >> s.vt[j])) {
      throw std::runtime_error("snapshot: malformed row " + std::to_string(j));
    }
  }
  s.validate();
  return s;
}

inline void save_snapshot(const std::string& path, const FieldState& s) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write snapshot: " + path);
  write_snapshot(os, s);
}

inline FieldState load_snapshot(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open snapshot: " + path);
  return read_snapshot(is);
}

}  // namespace nlw
