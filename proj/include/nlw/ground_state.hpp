#pragma once

// Ground state W(r) = (1 + r^2/3)^{-1/2} of Delta W + W^5 = 0, its H^1-invariant
// rescalings, closed-form energies, and the scaling zero mode.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nlw/quadrature.hpp"

namespace nlw {

/// Signed soliton scale: kappa * W_lambda.
struct SolitonProfile {
  int kappa = 1;
  double lambda = 1.0;

  SolitonProfile() = default;
  SolitonProfile(int k, double l) : kappa(k), lambda(l) {
    if (k != 1 && k != -1) throw std::invalid_argument("SolitonProfile: kappa must be +1 or -1");
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw std::invalid_argument("SolitonProfile: lambda must be positive and finite");
    }
  }
};

inline double eval_W(double r) { return 1.0 / std::sqrt(1.0 + r * r / 3.0); }

inline double eval_W_prime(double r) {
  const double q = 1.0 + r * r / 3.0;
  return -(r / 3.0) / (q * std::sqrt(q));
}

inline double eval_W_lambda(const SolitonProfile& p, double r) {
  return p.kappa * std::sqrt(p.lambda) * eval_W(p.lambda * r);
}

inline double eval_W_lambda_prime(const SolitonProfile& p, double r) {
  return p.kappa * p.lambda * std::sqrt(p.lambda) * eval_W_prime(p.lambda * r);
}

/// Lambda W = W/2 + r W', the generator of the scaling symmetry at lambda = 1.
inline double eval_scaling_mode(double r) {
  const double q = 1.0 + r * r / 3.0;
  return 0.5 / std::sqrt(q) - (r * r / 3.0) / (q * std::sqrt(q));
}

namespace ground_state {

/// int_{R^3} |grad W|^2 = 3 sqrt(3) pi^2 / 4.
inline constexpr double grad_norm_sq = 3.0 * std::numbers::sqrt3 * std::numbers::pi * std::numbers::pi / 4.0;

/// int_{R^3} W^6, equal to grad_norm_sq by the Pohozaev identity.
inline constexpr double sextic_integral = grad_norm_sq;

/// E(W) = (1/3) int |grad W|^2 = sqrt(3) pi^2 / 4.
inline constexpr double energy = grad_norm_sq / 3.0;

/// Sharp radial Sobolev constant in 1/2 |grad u|^2 - C_* |grad u|^6, from the equality case u = W.
inline constexpr double sobolev_cstar = 1.0 / (6.0 * grad_norm_sq * grad_norm_sq);

// Antiderivatives of t^4/(1+t^2)^3 and t^2/(1+t^2)^3 vanishing at t = 0.
inline double antideriv_t4(double t) {
  const double q = 1.0 + t * t;
  return (-5.0 * t * t * t - 3.0 * t) / (8.0 * q * q) + 3.0 * std::atan(t) / 8.0;
}
inline double antideriv_t2(double t) {
  const double q = 1.0 + t * t;
  return (t * t * t - t) / (8.0 * q * q) + std::atan(t) / 8.0;
}

/// int_{|x| > R} |grad W|^2 dx in closed form.
inline double grad_tail(double R) {
  const double t = R / std::numbers::sqrt3;
  return 4.0 * std::numbers::pi * std::numbers::sqrt3 * (3.0 * std::numbers::pi / 16.0 - antideriv_t4(t));
}

/// int_{|x| > R} W^6 dx in closed form.
inline double sextic_tail(double R) {
  const double t = R / std::numbers::sqrt3;
  return 12.0 * std::numbers::pi * std::numbers::sqrt3 * (std::numbers::pi / 16.0 - antideriv_t2(t));
}

/// Quadrature of int |grad W_lambda|^2 on [0, r_quad/lambda] plus the closed-form tail.
inline double grad_norm_sq_quadrature(const SolitonProfile& p, double r_quad = 50.0,
                                      std::size_t panels = 20000) {
  const double R = r_quad / p.lambda;
  const double core = simpson(
      [&](double r) {
        const double d = eval_W_lambda_prime(p, r);
        return 4.0 * std::numbers::pi * r * r * d * d;
      },
      0.0, R, panels);
  return core + grad_tail(r_quad);
}

/// Quadrature of int W_lambda^6 with the closed-form tail.
inline double sextic_quadrature(const SolitonProfile& p, double r_quad = 50.0,
                                std::size_t panels = 20000) {
  const double R = r_quad / p.lambda;
  const double core = simpson(
      [&](double r) {
        const double w = eval_W_lambda(p, r);
        const double w2 = w * w;
        return 4.0 * std::numbers::pi * r * r * w2 * w2 * w2;
      },
      0.0, R, panels);
  return core + sextic_tail(r_quad);
}

}  // namespace ground_state

/// E(W), the energy carried away by each bubble at a continuation event.
inline double soliton_energy() { return ground_state::energy; }

/// int_{|x|<R} W_lambda^2 dx by quadrature; bounded by 12 pi R / lambda.
inline double cutoff_mass(double lambda, double R, std::size_t panels = 4096) {
  if (!(lambda > 0.0) || !(R > 0.0)) throw std::invalid_argument("cutoff_mass: lambda and R must be positive");
  // x = lambda r turns the integrand into the bounded x^2/(1 + x^2/3).
  const double X = lambda * R;
  const double s = simpson([](double x) { return x * x / (1.0 + x * x / 3.0); }, 0.0, X, panels);
  return 4.0 * std::numbers::pi * s / (lambda * lambda);
}

}  // namespace nlw
