#pragma once

// Gradient-flow solvers for (-Delta)^s u = f(u): 1D layers connecting -1 to
// +1 and 2D solutions monotone in one axis, plus limit extraction.
//
// The flow relaxes the first variation of the discrete Gagliardo energy
// (energy_consistent_operator), so converged states are critical points of
// exactly the functional that the energy module evaluates. Applications of
// the operator are FFT convolutions; the exterior tail blocks are
// precomputed per node and stay valid while the boundary data is frozen.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "fraclab/energy.hpp"
#include "fraclab/errors.hpp"
#include "fraclab/fft.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/kernel_geometry.hpp"
#include "fraclab/model.hpp"

namespace fraclab {

namespace detail {

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace detail

/// Matrix-free application of the first variation of the discrete Gagliardo
/// kinetic energy, with the grid double sum done as an FFT convolution.
/// Requires the tail data (boundary columns for the layer tail) to remain
/// frozen between construction and application.
class EnergyOperator {
 public:
  EnergyOperator(const GridFunction& shape_like, double s)
      : dim_(shape_like.dim()), s_(s), h_(shape_like.spacing()),
        shape_(shape_like.shape()) {
    cns_ = frac_constant(dim_, s).value;
    diag_coeff_ =
        cell_second_moment(dim_, s) * std::pow(0.5 * h_, 2.0 - 2.0 * s);
    const double hn = std::pow(h_, dim_);
    const double expo = -0.5 * (dim_ + 2.0 * s);
    for (int d = 0; d < 3; ++d)
      pad_[d] = d < dim_ ? detail::next_pow2(2 * shape_[d]) : 1;
    const std::size_t pn = static_cast<std::size_t>(pad_[0]) * pad_[1] * pad_[2];
    khat_.assign(pn, {0.0, 0.0});
    // kernel h^n |delta|^{-(n+2s)} at every nonzero offset, wrapped into the
    // padded box
    for (int di = -(shape_[0] - 1); di <= shape_[0] - 1; ++di)
      for (int dj = -(dim_ > 1 ? shape_[1] - 1 : 0);
           dj <= (dim_ > 1 ? shape_[1] - 1 : 0); ++dj) {
        if (di == 0 && dj == 0) continue;
        const double r2 = (di * di + dj * dj) * h_ * h_;
        const std::size_t idx =
            static_cast<std::size_t>((di + pad_[0]) % pad_[0]) * pad_[1] +
            (dim_ > 1 ? (dj + pad_[1]) % pad_[1] : 0);
        khat_[idx] = std::pow(r2, expo) * hn;
      }
    fftn_inplace(khat_, pad_, -1);
    // S0(x) = sum_{y in box, y != x} h^n k(x-y): convolution with ones
    GridFunction ones(dim_, shape_, h_, shape_like.origin(),
                      TailModel::Constant(0.0));
    std::fill(ones.values().begin(), ones.values().end(), 1.0);
    s0_ = convolve(ones);
    // exterior blocks from the frozen tail data
    e0_.assign(shape_like.size(), 0.0);
    e1_.assign(shape_like.size(), 0.0);
    shape_like.for_each_index([&](int i, int j, int k) {
      const std::size_t id = shape_like.index(i, j, k);
      e0_[id] = detail::exterior_tail_integral(shape_like, i, j, k, s_,
                                               [](double) { return 1.0; });
      e1_[id] = detail::exterior_tail_integral(shape_like, i, j, k, s_,
                                               [](double vy) { return vy; });
    });
  }

  /// L v = first variation per unit volume of the discrete kinetic energy.
  GridFunction apply(const GridFunction& v) const {
    GridFunction out(v.dim(), v.shape(), v.spacing(), v.origin(),
                     TailModel::Constant(0.0));
    const std::vector<double> conv = convolve(v);
    v.for_each_index([&](int i, int j, int k) {
      const std::size_t id = v.index(i, j, k);
      const double vx = v.at(i, j, k);
      double wide = 0.0;
      const std::array<int, 3> idx = {i, j, k};
      for (int d = 0; d < dim_; ++d) {
        auto value_at = [&](int off) {
          std::array<int, 3> q = idx;
          q[d] += off;
          if (q[d] >= 0 && q[d] < shape_[d]) return v.at(q[0], q[1], q[2]);
          auto p = v.point(i, j, k);
          p[d] += off * h_;
          return v.eval(p);
        };
        wide += (2.0 * vx - value_at(-2) - value_at(+2)) / (2.0 * h_ * h_);
      }
      out.at(i, j, k) =
          2.0 * cns_ * (vx * (s0_[id] + e0_[id]) - conv[id] - e1_[id]) +
          0.5 * cns_ * diag_coeff_ * wide;
    });
    return out;
  }

 private:
  std::vector<double> convolve(const GridFunction& v) const {
    const std::size_t pn = khat_.size();
    std::vector<std::complex<double>> a(pn, {0.0, 0.0});
    v.for_each_index([&](int i, int j, int k) {
      a[static_cast<std::size_t>(i) * pad_[1] + (dim_ > 1 ? j : 0)] =
          v.at(i, j, k);
    });
    fftn_inplace(a, pad_, -1);
    for (std::size_t i = 0; i < pn; ++i) a[i] *= khat_[i];
    fftn_inplace(a, pad_, +1);
    std::vector<double> out(v.size());
    v.for_each_index([&](int i, int j, int k) {
      out[v.index(i, j, k)] =
          a[static_cast<std::size_t>(i) * pad_[1] + (dim_ > 1 ? j : 0)].real();
    });
    return out;
  }

  int dim_;
  double s_;
  double h_;
  std::array<int, 3> shape_;
  std::array<int, 3> pad_ = {1, 1, 1};
  double cns_ = 0.0;
  double diag_coeff_ = 0.0;
  std::vector<std::complex<double>> khat_;
  std::vector<double> s0_, e0_, e1_;
};

/// Top-eigenvalue estimate of phi -> L phi - f'(u) phi by power iteration.
inline double power_iteration_lambda(const EnergyOperator& L,
                                     const GridFunction& u,
                                     const Nonlinearity& nl, int steps = 40) {
  GridFunction v(u.dim(), u.shape(), u.spacing(), u.origin(),
                 TailModel::Constant(0.0));
  for (std::size_t i = 0; i < v.size(); ++i)
    v.values()[i] = std::sin(0.7 * static_cast<double>(i) + 0.3);
  double lambda = 1.0;
  for (int it = 0; it < steps; ++it) {
    GridFunction w = L.apply(v);
    for (std::size_t i = 0; i < w.size(); ++i)
      w.values()[i] -= nl.f_prime(u.values()[i]) * v.values()[i];
    double norm = 0.0;
    for (double x : w.values()) norm = std::max(norm, std::abs(x));
    if (norm == 0.0) return 1.0;
    lambda = norm;
    for (std::size_t i = 0; i < v.size(); ++i)
      v.values()[i] = w.values()[i] / norm;
  }
  return lambda;
}

struct LayerSolution {
  GridFunction grid;
  double residual_norm = 0.0;
  bool monotone = false;
  double min_slope = 0.0;
  double tail_mismatch = 0.0;
  std::vector<double> residual_history;
};

/// Damped gradient flow u <- u + tau (f(u) - L u) from tanh(x), with odd
/// symmetry enforced each step and the layer tail (+-1 outside the box).
inline LayerSolution solve_layer(const Nonlinearity& nl, double s,
                                 double X_max, int N, double tol,
                                 int max_iters = 60000) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError("solve_layer: s not in (0,1)");
  if (N % 2 == 0) throw DomainError("solve_layer: N must be odd");
  const double h = 2.0 * X_max / (N - 1);
  GridFunction u =
      GridFunction::line(N, -X_max, h, TailModel::ConstantPm1(0));
  for (int i = 0; i < N; ++i) u.at(i) = std::tanh(u.coord(0, i));
  const EnergyOperator L(u, s);
  const double tau = 0.5 / power_iteration_lambda(L, u, nl);

  LayerSolution sol;
  double res = 1e300;
  for (int it = 0; it < max_iters; ++it) {
    GridFunction Lu = L.apply(u);
    res = 0.0;
    for (int i = 0; i < N; ++i) {
      const double r = nl.f(u.at(i)) - Lu.at(i);
      res = std::max(res, std::abs(r));
      u.at(i) += tau * r;
    }
    for (int i = 0; i < N / 2; ++i) { // odd symmetry about the center node
      const double v = 0.5 * (u.at(i) - u.at(N - 1 - i));
      u.at(i) = v;
      u.at(N - 1 - i) = -v;
    }
    u.at(N / 2) = 0.0;
    if (it % 25 == 0 || res <= tol) sol.residual_history.push_back(res);
    if (res <= tol) break;
  }
  if (res > tol)
    throw NumericalError("solve_layer: flow did not reach tolerance", res);
  sol.min_slope = 1e300;
  for (int i = 0; i + 1 < N; ++i)
    sol.min_slope = std::min(sol.min_slope, (u.at(i + 1) - u.at(i)) / h);
  sol.monotone = sol.min_slope > 0.0;
  if (!sol.monotone)
    throw NumericalError("solve_layer: monotonicity lost (step too large)",
                         sol.min_slope);
  sol.residual_norm = res;
  sol.tail_mismatch = u.tail_mismatch();
  sol.grid = std::move(u);
  return sol;
}

/// Roots of f in [-1.2, 1.2] by sign-change bisection.
inline std::vector<double> nonlinearity_roots(const Nonlinearity& nl) {
  std::vector<double> roots;
  const int M = 4801;
  double prev = nl.f(-1.2);
  for (int i = 1; i <= M; ++i) {
    const double t = -1.2 + 2.4 * i / M;
    const double cur = nl.f(t);
    if (prev == 0.0) roots.push_back(-1.2 + 2.4 * (i - 1) / M);
    if (prev * cur < 0.0) {
      double a = -1.2 + 2.4 * (i - 1) / M, b = t;
      for (int it = 0; it < 80; ++it) {
        const double m = 0.5 * (a + b);
        (nl.f(a) * nl.f(m) <= 0.0 ? b : a) = m;
      }
      roots.push_back(0.5 * (a + b));
    }
    prev = cur;
  }
  return roots;
}

/// Limits of a bounded monotone 1D grid function at -inf/+inf, extrapolated
/// algebraically (u ~ l + C |x|^{-2s}) and snapped to the nearest root of f.
inline std::pair<double, double> limit_trichotomy(
    const GridFunction& u, double s,
    const Nonlinearity& nl = make_cubic_nonlinearity()) {
  if (u.dim() != 1) throw DomainError("limit_trichotomy: 1D input required");
  const int N = u.shape()[0];
  auto extrapolate = [&](int ib, int ia) {
    const double xa = std::abs(u.coord(0, ia)), xb = std::abs(u.coord(0, ib));
    if (xa <= 0.0 || xb <= 0.0 || xa == xb) return u.at(ib);
    const double ta = std::pow(xa, -2.0 * s), tb = std::pow(xb, -2.0 * s);
    return u.at(ia) - ta * (u.at(ib) - u.at(ia)) / (tb - ta);
  };
  // stay away from both the center and the frozen-tail boundary layer
  const int ib = static_cast<int>(std::lround(0.8 * (N - 1)));
  const int ia = static_cast<int>(std::lround(0.7 * (N - 1)));
  const double l_plus = extrapolate(ib, ia);
  const double l_minus = extrapolate(N - 1 - ib, N - 1 - ia);
  const auto roots = nonlinearity_roots(nl);
  auto snap = [&](double l) {
    double best = l, dist = 1e300;
    for (double r : roots)
      if (std::abs(l - r) < dist) {
        dist = std::abs(l - r);
        best = r;
      }
    if (dist > 0.05)
      throw NumericalError("limit_trichotomy: inconclusive snap", dist);
    return best;
  };
  return {snap(l_minus), snap(l_plus)};
}

/// Gradient-flow relaxation on a 2D box with a frozen collar carrying the
/// prescribed boundary data; returns a solution monotone in the grid's
/// declared axis. boundary_data(x1, x2) initializes every node and stays
/// frozen on the collar.
inline GridFunction solve_monotone_2d(
    const Nonlinearity& nl, double s, const GridFunction& domain,
    const std::function<double(double, double)>& boundary_data, double tol,
    int collar = 6, int max_iters = 60000) {
  if (domain.dim() != 2)
    throw DomainError("solve_monotone_2d: 2D domain required");
  if (domain.tail().kind != TailKind::kConstantPm1)
    throw ContractError("solve_monotone_2d: domain must declare a layer tail");
  GridFunction u = domain;
  u.for_each_index([&](int i, int j, int k) {
    const auto p = u.point(i, j, k);
    u.at(i, j) = boundary_data(p[0], p[1]);
    (void)k;
  });
  const EnergyOperator L(u, s);
  const double tau = 0.5 / power_iteration_lambda(L, u, nl);
  auto frozen = [&](int i, int j) {
    return i < collar || i >= u.shape()[0] - collar || j < collar ||
           j >= u.shape()[1] - collar;
  };
  double res = 1e300;
  for (int it = 0; it < max_iters; ++it) {
    GridFunction Lu = L.apply(u);
    res = 0.0;
    for (int i = 0; i < u.shape()[0]; ++i)
      for (int j = 0; j < u.shape()[1]; ++j) {
        if (frozen(i, j)) continue;
        const double r = nl.f(u.at(i, j)) - Lu.at(i, j);
        res = std::max(res, std::abs(r));
        u.at(i, j) += tau * r;
      }
    if (res <= tol) break;
  }
  if (res > tol)
    throw NumericalError("solve_monotone_2d: flow did not reach tolerance",
                         res);
  // discrete monotonicity along the declared axis over edges with both
  // endpoints free; interface edges to the frozen collar carry the
  // truncation mismatch of the prescribed data and are not part of the claim
  const int m = u.tail().monotone_axis;
  double min_slope = 1e300;
  for (int i = collar; i < u.shape()[0] - collar - (m == 0 ? 1 : 0); ++i)
    for (int j = collar; j < u.shape()[1] - collar - (m == 1 ? 1 : 0); ++j) {
      const double here = u.at(i, j);
      const double next = m == 0 ? u.at(i + 1, j) : u.at(i, j + 1);
      min_slope = std::min(min_slope, (next - here) / u.spacing());
    }
  if (min_slope <= 0.0)
    throw NumericalError(
        "solve_monotone_2d: monotonicity violated after convergence "
        "(inconsistent boundary data)",
        min_slope);
  return u;
}

/// Bottom/top limit profiles of a 2D solution monotone in its declared
/// axis, extrapolated algebraically toward the layer tail and snapped to
/// the pure phases where they arrive there.
inline std::pair<GridFunction, GridFunction> profiles_at_infinity(
    const GridFunction& u, double s) {
  if (u.dim() != 2)
    throw DomainError("profiles_at_infinity: 2D input required");
  const int m = u.tail().monotone_axis;
  const int lat = 1 - m;
  const int Nl = u.shape()[lat];
  auto sample = [&](double xl, double xm) {
    return m == 0 ? u.eval({xm, xl, 0.0}) : u.eval({xl, xm, 0.0});
  };
  const double X =
      std::min(std::abs(u.axis_min(m)), std::abs(u.axis_max(m)));
  // two-correction algebraic extrapolation: fit L + c1 x^{-2s} + c2 x^{-4s}
  // through samples at 0.25X, 0.375X, 0.5X; the window stays away from the
  // box edge, where the truncated far field distorts the tail
  auto extrapolate = [&](double xl, double sign) {
    const double x1 = 0.25 * X, x2 = 0.375 * X, x3 = 0.5 * X;
    if (x1 < 2.0 * u.spacing()) return sample(xl, sign * X);
    const double a1 = std::pow(x1, -2.0 * s), a2 = std::pow(x2, -2.0 * s),
                 a3 = std::pow(x3, -2.0 * s);
    const double f1 = sample(xl, sign * x1), f2 = sample(xl, sign * x2),
                 f3 = sample(xl, sign * x3);
    const double p1 = a2 - a1, q1 = a2 * a2 - a1 * a1;
    const double p2 = a3 - a2, q2 = a3 * a3 - a2 * a2;
    const double det = p1 * q2 - p2 * q1;
    if (det == 0.0) return sample(xl, sign * X);
    const double c1 = ((f2 - f1) * q2 - (f3 - f2) * q1) / det;
    const double c2 = (p1 * (f3 - f2) - p2 * (f2 - f1)) / det;
    return f1 - c1 * a1 - c2 * a1 * a1;
  };
  const double kBig = 1e9; // tail-model territory along the monotone axis
  GridFunction over = GridFunction::line(Nl, u.axis_min(lat), u.spacing(),
                                         TailModel::Constant(1.0));
  GridFunction under = GridFunction::line(Nl, u.axis_min(lat), u.spacing(),
                                          TailModel::Constant(-1.0));
  double worst = 0.0;
  for (int q = 0; q < Nl; ++q) {
    const double xl = u.coord(lat, q);
    double lo = extrapolate(xl, -1.0);
    double hi = extrapolate(xl, +1.0);
    const double lo_decl = sample(xl, -kBig), hi_decl = sample(xl, kBig);
    worst = std::max({worst, std::abs(hi - hi_decl), std::abs(lo - lo_decl)});
    if (std::abs(hi - hi_decl) <= 0.05) hi = hi_decl; // snap to declared limit
    if (std::abs(lo - lo_decl) <= 0.05) lo = lo_decl;
    over.at(q) = hi;
    under.at(q) = lo;
    if (lo > hi)
      throw NumericalError("profiles_at_infinity: profiles cross", lo - hi);
  }
  if (worst > 0.05)
    throw NumericalError(
        "profiles_at_infinity: extrapolation disagrees with the declared "
        "tail",
        worst);
  // classify the profile tails: layer-like if the ends reach the two phases
  auto classify = [&](GridFunction& g) {
    const double a = g.at(0), b = g.at(g.shape()[0] - 1);
    if (std::abs(a + 1.0) <= 0.05 && std::abs(b - 1.0) <= 0.05)
      g.tail() = TailModel::ConstantPm1(0);
    else if (std::abs(a - b) <= 0.05)
      g.tail() = TailModel::Constant(0.5 * (a + b));
  };
  classify(over);
  classify(under);
  return {under, over};
}

}  // namespace fraclab
