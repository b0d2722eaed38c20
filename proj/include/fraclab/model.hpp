#pragma once

// Bistable nonlinearity f, potential F(t) = -int_{-1}^t f, and the
// structural checks on f: double roots at +-1, uniformly negative slope in
// the end zones, the sign condition on the half-interval integrals of f, and
// the regularity exponent required by the active fractional power.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

struct Nonlinearity {
  std::function<double(double)> f;
  std::function<double(double)> f_prime;
  std::function<double(double)> potential_exact; // optional closed form of F
  double kappa = 0.0;        // width of the end zones near +-1
  double c_kappa = 0.0;      // derivative bound inside the end zones
  double holder_alpha = 1.0; // Holder exponent of f'
  std::string name = "custom";
};

/// f(t) = t - t^3. kappa is fixed at 0.3 and c_kappa is measured as the
/// minimum of -f' over the end zones rather than hard-coded.
inline Nonlinearity make_cubic_nonlinearity() {
  Nonlinearity nl;
  nl.f = [](double t) { return t - t * t * t; };
  nl.f_prime = [](double t) { return 1.0 - 3.0 * t * t; };
  nl.potential_exact = [](double t) {
    const double q = 1.0 - t * t;
    return 0.25 * q * q;
  };
  nl.kappa = 0.3;
  nl.name = "cubic";
  double c = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 200; ++i) {
    const double t = 1.0 - nl.kappa + nl.kappa * i / 200.0;
    c = std::min(c, -nl.f_prime(t));
    c = std::min(c, -nl.f_prime(-t));
  }
  nl.c_kappa = c;
  nl.holder_alpha = 1.0;
  return nl;
}

/// f given by polynomial coefficients, f(t) = sum_i c_i t^i.
inline Nonlinearity make_polynomial_nonlinearity(
    const std::vector<double>& coeffs, double kappa = 0.3) {
  Nonlinearity nl;
  nl.f = [coeffs](double t) {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * t + coeffs[i];
    return acc;
  };
  nl.f_prime = [coeffs](double t) {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 1;)
      acc = acc * t + coeffs[i] * static_cast<double>(i);
    return acc;
  };
  nl.kappa = kappa;
  nl.name = "polynomial";
  double c = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 200; ++i) {
    const double t = 1.0 - kappa + kappa * i / 200.0;
    c = std::min(c, -nl.f_prime(t));
    c = std::min(c, -nl.f_prime(-t));
  }
  nl.c_kappa = c;
  nl.holder_alpha = 1.0;
  return nl;
}

/// F(t) = -int_{-1}^t f, by adaptive Simpson with absolute tolerance 1e-10.
/// F(-1) = 0 exactly; for the cubic model F(t) = (1-t^2)^2/4.
inline double potential(const Nonlinearity& nl, double t) {
  if (nl.potential_exact) return nl.potential_exact(t);
  if (t == -1.0) return 0.0;
  return -integrate(nl.f, -1.0, t, 1e-10);
}

inline double potential_second(const Nonlinearity& nl, double t) {
  return -nl.f_prime(t); // F'' = -f'
}

struct ValidationReport {
  bool roots_at_pm1 = false;
  bool end_zone_slope = false;
  bool sign_condition = false;
  bool regularity = false;
  double f_at_minus1 = 0.0;
  double f_at_plus1 = 0.0;
  double integral_plus = 0.0;  // int_0^1 f
  double integral_minus = 0.0; // int_{-1}^0 f
  double kappa = 0.0;
  double c_kappa = 0.0;
  double holder_alpha = 0.0;
  bool all_pass() const {
    return roots_at_pm1 && end_zone_slope && sign_condition && regularity;
  }
};

/// Checks the bistability assumptions for the fractional power s. Failures
/// are report entries, not errors.
inline ValidationReport validate_bistable(const Nonlinearity& nl, double s) {
  if (!(s > 0.0 && s < 1.0))
    throw DomainError("validate_bistable: s must lie in (0,1)");
  ValidationReport rep;
  rep.f_at_minus1 = nl.f(-1.0);
  rep.f_at_plus1 = nl.f(1.0);
  rep.roots_at_pm1 =
      std::abs(rep.f_at_minus1) <= 1e-12 && std::abs(rep.f_at_plus1) <= 1e-12;
  rep.kappa = nl.kappa;
  rep.c_kappa = nl.c_kappa;
  rep.end_zone_slope = nl.kappa > 0.0 && nl.c_kappa > 0.0;
  for (int i = 0; i <= 400 && rep.end_zone_slope; ++i) {
    const double t = 1.0 - nl.kappa + nl.kappa * i / 400.0;
    if (!(nl.f_prime(t) < -nl.c_kappa + 1e-13) ||
        !(nl.f_prime(-t) < -nl.c_kappa + 1e-13))
      rep.end_zone_slope = false;
  }
  rep.integral_plus = integrate(nl.f, 0.0, 1.0, 1e-10);
  rep.integral_minus = integrate(nl.f, -1.0, 0.0, 1e-10);
  rep.sign_condition = rep.integral_plus > 0.0 && rep.integral_minus < 0.0;
  rep.holder_alpha = nl.holder_alpha;
  rep.regularity = nl.holder_alpha > 1.0 - 2.0 * s;
  return rep;
}

}  // namespace fraclab
