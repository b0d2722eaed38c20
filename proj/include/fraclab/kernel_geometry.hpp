#pragma once

// Geometric integrals of the singular kernel |y|^{-(n+2s)}: the exact
// normalization constant, moments over grid cells, and closed or
// semi-analytic integrals over half-spaces and box exteriors. These are the
// shared building blocks for the direct quadrature of (-Delta)^s and for the
// tail blocks of the Gagliardo energies.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "fraclab/errors.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

struct FracConstant {
  int n = 1;
  double s = 0.5;
  double value = 0.0;
};

/// c_{n,s} = 2^{2s-1} s Gamma(n/2+s) / (pi^{n/2} Gamma(1-s)).
/// This is the constant of the symmetrized second-difference kernel, i.e.
/// half the one-sided convention; with it the Fourier symbol is |k|^{2s}.
inline FracConstant frac_constant(int n, double s) {
  if (n < 1) throw DomainError("frac_constant: n must be >= 1");
  if (!(s > 0.0 && s < 1.0))
    throw DomainError("frac_constant: s must lie in (0,1)");
  const double log_value = (2.0 * s - 1.0) * std::numbers::ln2 +
                           std::log(s) + std::lgamma(0.5 * n + s) -
                           0.5 * n * std::log(std::numbers::pi) -
                           std::lgamma(1.0 - s);
  return FracConstant{n, s, std::exp(log_value)};
}

/// Second moment of the kernel over the unit-half-width cube:
///   T_n(s) = int_{[-1,1]^n} y_1^2 |y|^{-(n+2s)} dy.
/// By homogeneity the same moment over half-width b is b^{2-2s} T_n(s).
/// Cross moments (y_i y_j, i != j) vanish by symmetry.
inline double cell_second_moment(int n, double s) {
  const double p = 2.0 - 2.0 * s;
  if (n == 1) return 2.0 / p;
  if (n == 2) {
    // Polar reduction: int cos^2(t) rho(t)^{2-2s}/(2-2s) dt with
    // rho(t) = 1/max(|cos t|,|sin t|). Integrate one octant and use symmetry:
    // over [0, pi/4], rho = 1/cos t; the eight octants cover cos^2 and sin^2
    // in alternation, so the full integral is 4 * int_0^{pi/4} (cos^2+sin^2)
    // * rho^{2-2s} dt = 4 * int_0^{pi/4} cos^{2s-2} t dt.
    auto f = [&](double t) { return std::pow(std::cos(t), 2.0 * s - 2.0); };
    return 4.0 / p * integrate(f, 0.0, std::numbers::pi / 4.0, 1e-12);
  }
  if (n == 3) {
    // Spherical reduction: int_{S^2} w_1^2 rho(w)^{2-2s}/(2-2s) dsigma,
    // rho(w) = 1/|w|_inf. The integrand has kinks along the cube edges,
    // handled by a fine composite Gauss grid.
    auto inner = [&](double phi) {
      const double sp = std::sin(phi), cp = std::cos(phi);
      auto g = [&](double th) {
        const double w1 = sp * std::cos(th);
        const double w2 = sp * std::sin(th);
        const double w3 = cp;
        const double winf =
            std::max({std::abs(w1), std::abs(w2), std::abs(w3)});
        return w1 * w1 * std::pow(winf, p) * sp;
      };
      return gauss16_composite(g, 0.0, 2.0 * std::numbers::pi, 64);
    };
    return gauss16_composite(inner, 0.0, std::numbers::pi, 64) / p;
  }
  throw DomainError("cell_second_moment: n must be 1, 2 or 3");
}

/// int_{y_1 > Y} |y|^{-(n+2s)} dy = A_n(s) Y^{-2s} / (2s), with
/// A_n(s) = pi^{(n-1)/2} Gamma(s+1/2) / Gamma((n+2s)/2).
inline double halfspace_kernel_integral(int n, double s, double Y) {
  if (Y <= 0.0) throw DomainError("halfspace_kernel_integral: Y must be > 0");
  const double logA = 0.5 * (n - 1) * std::log(std::numbers::pi) +
                      std::lgamma(s + 0.5) - std::lgamma(0.5 * n + s);
  return std::exp(logA) * std::pow(Y, -2.0 * s) / (2.0 * s);
}

/// int over the exterior of the box prod_i [-dm_i, dp_i] of |y|^{-(n+2s)} dy,
/// via the radial identity  int_{S^{n-1}} rho(w)^{-2s}/(2s) dsigma(w)  with
/// rho(w) the distance from the origin to the box boundary along w.
inline double box_exterior_kernel_integral(int n,
                                           const std::array<double, 3>& dm,
                                           const std::array<double, 3>& dp,
                                           double s) {
  for (int i = 0; i < n; ++i)
    if (dm[i] <= 0.0 || dp[i] <= 0.0)
      throw DomainError("box_exterior_kernel_integral: box must contain 0");
  auto rho = [&](const std::array<double, 3>& w) {
    double r = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (w[i] > 1e-300) r = std::min(r, dp[i] / w[i]);
      if (w[i] < -1e-300) r = std::min(r, dm[i] / (-w[i]));
    }
    return r;
  };
  if (n == 1)
    return (std::pow(dm[0], -2.0 * s) + std::pow(dp[0], -2.0 * s)) /
           (2.0 * s);
  if (n == 2) {
    auto f = [&](double t) {
      std::array<double, 3> w = {std::cos(t), std::sin(t), 0.0};
      return std::pow(rho(w), -2.0 * s);
    };
    return gauss16_composite(f, 0.0, 2.0 * std::numbers::pi, 128) /
           (2.0 * s);
  }
  if (n == 3) {
    auto inner = [&](double phi) {
      const double sp = std::sin(phi), cp = std::cos(phi);
      auto g = [&](double th) {
        std::array<double, 3> w = {sp * std::cos(th), sp * std::sin(th), cp};
        return std::pow(rho(w), -2.0 * s) * sp;
      };
      return gauss16_composite(g, 0.0, 2.0 * std::numbers::pi, 48);
    };
    return gauss16_composite(inner, 0.0, std::numbers::pi, 48) / (2.0 * s);
  }
  throw DomainError("box_exterior_kernel_integral: n must be 1, 2 or 3");
}

/// n=2 lateral ray integral  int_b^inf (q^2 + t^2)^{-(1+s)} dt.
inline double lateral_ray_integral(double q, double b, double s) {
  if (b <= 0.0) throw DomainError("lateral_ray_integral: b must be > 0");
  q = std::abs(q);
  if (q < 1e-300) return std::pow(b, -1.0 - 2.0 * s) / (1.0 + 2.0 * s);
  // t = q tan(theta):  q^{-1-2s} int_{atan(b/q)}^{pi/2} cos^{2s} theta dtheta
  const double th0 = std::atan2(b, q);
  return std::pow(q, -1.0 - 2.0 * s) *
         cos_power_tail_integral([](double) { return 1.0; }, 2.0 * s, th0);
}

}  // namespace fraclab
