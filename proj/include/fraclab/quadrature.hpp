#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace fraclab {

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a,
                      double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f,
                                   double a, double b, double fa, double fm,
                                   double fb, double whole, double tol,
                                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(f, a, m, fa, flm, fm);
  const double right = simpson(f, m, b, fm, frm, fb);
  const double err = left + right - whole;
  if (std::abs(err) <= 15.0 * tol || depth <= 0)
    return left + right + err / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol,
                              depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol,
                              depth - 1);
}

}  // namespace detail

/// Adaptive Simpson on [a,b] with absolute tolerance. Throws on
/// non-finite integrand samples.
inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double abs_tol = 1e-10,
                        int max_depth = 40) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm))
    throw QuadratureError("integrate: non-finite integrand sample");
  const double whole = detail::simpson(f, a, b, fa, fm, fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol,
                                      max_depth);
}

// 16-point Gauss-Legendre nodes/weights on [-1,1].
inline constexpr std::array<double, 16> kGauss16Nodes = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318,
    -0.7554044083550030, -0.6178762444026438, -0.4580167776572274,
    -0.2816035507792589, -0.0950125098376374, 0.0950125098376374,
    0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,
    0.9894009349916499};
inline constexpr std::array<double, 16> kGauss16Weights = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928,
    0.1246289712555339, 0.1495959888165767, 0.1691565193950025,
    0.1826034150449236, 0.1894506104550685, 0.1894506104550685,
    0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479,
    0.0271524594117541};

/// Fixed 16-point Gauss-Legendre rule on [a,b].
inline double gauss16(const std::function<double(double)>& f, double a,
                      double b) {
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < 16; ++i)
    sum += kGauss16Weights[i] * f(c + r * kGauss16Nodes[i]);
  return r * sum;
}

/// int_X^{pi/2} g(theta) cos^p(theta) dtheta with g smooth and p > -1, via
/// the reflection theta = pi/2 - psi and the substitution psi = w^{1/(p+1)},
/// which removes the endpoint singularity (the integrand tends to
/// g(pi/2)/(p+1) at w = 0).
template <class G>
double cos_power_tail_integral(G&& g, double p, double X) {
  if (X >= 0.5 * std::numbers::pi) return 0.0;
  const double W = std::pow(0.5 * std::numbers::pi - X, p + 1.0);
  auto f = [&](double w) {
    const double psi = std::pow(w, 1.0 / (p + 1.0));
    const double core =
        psi < 1e-12 ? 1.0 : std::pow(std::sin(psi) / psi, p);
    return g(0.5 * std::numbers::pi - psi) * core / (p + 1.0);
  };
  return integrate(f, 0.0, W, 1e-13);
}

/// Composite 16-point Gauss over `panels` equal subintervals.
inline double gauss16_composite(const std::function<double(double)>& f,
                                double a, double b, int panels) {
  double sum = 0.0;
  const double w = (b - a) / panels;
  for (int p = 0; p < panels; ++p)
    sum += gauss16(f, a + p * w, a + (p + 1) * w);
  return sum;
}

}  // namespace fraclab
