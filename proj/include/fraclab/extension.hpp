#pragma once

// Poisson kernel of order s, the a-harmonic extension E_v on truncated
// half-space boxes, and weighted Dirichlet energies with the z^a measure.
//
// The z-mesh is graded as z_j = R (j/M)^{1/(1+a)}, which equidistributes the
// substituted variable t = z^{1+a}/(1+a) and hence the quadrature error of
// the degenerate/singular weight. Energies are assembled cell by cell with
// the exact z^a mass per z-interval, so regional decompositions are exact.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/fft.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/kernel_geometry.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

struct PoissonKernel {
  int n = 1;
  double s = 0.5;
  double a = 0.0;    // 1 - 2s
  double cbar = 0.0; // normalization: int P(x,z) dx = 1
};

namespace detail {

/// int_{R^n} (1+|x|^2)^{-(n+2s)/2} dx by radial reduction with the tangent
/// substitution (self-validating numerical normalization).
inline double poisson_norm_integral(int n, double s) {
  const double p = 2.0 * s - 1.0;
  if (n == 1)
    return 2.0 * cos_power_tail_integral([](double) { return 1.0; }, p, 0.0);
  if (n == 2)
    return 2.0 * std::numbers::pi *
           cos_power_tail_integral([](double th) { return std::sin(th); }, p,
                                   0.0);
  if (n == 3)
    return 4.0 * std::numbers::pi *
           cos_power_tail_integral(
               [](double th) {
                 const double st = std::sin(th);
                 return st * st;
               },
               p, 0.0);
  throw DomainError("poisson_norm_integral: n must be 1-3");
}

}  // namespace detail

inline PoissonKernel make_poisson_kernel(int n, double s) {
  if (!(s > 0.0 && s < 1.0))
    throw DomainError("make_poisson_kernel: s must lie in (0,1)");
  PoissonKernel k;
  k.n = n;
  k.s = s;
  k.a = 1.0 - 2.0 * s;
  k.cbar = 1.0 / detail::poisson_norm_integral(n, s);
  return k;
}

inline double poisson_eval(const PoissonKernel& k,
                           const std::array<double, 3>& x, double z) {
  if (z <= 0.0) throw DomainError("poisson_eval: z must be > 0");
  double r2 = z * z;
  for (int d = 0; d < k.n; ++d) r2 += x[d] * x[d];
  return k.cbar * std::pow(z, 2.0 * k.s) *
         std::pow(r2, -0.5 * (k.n + 2.0 * k.s));
}

/// CDF of the 1D Poisson kernel at z=1 (also the monotone-axis marginal of
/// the n-dimensional kernel). Used for the closed extension of a step trace.
inline double kernel_cdf_1d(double s, double tau) {
  static thread_local double cached_s = -1.0;
  static thread_local double cached_cbar = 0.0;
  if (cached_s != s) {
    cached_cbar = 1.0 / detail::poisson_norm_integral(1, s);
    cached_s = s;
  }
  // w = tan(theta): int_{|tau|}^inf (1+w^2)^{-(1+2s)/2} dw, as the tail of
  // the cosine-power integral (stable for large |tau|)
  const double tail = cos_power_tail_integral(
      [](double) { return 1.0; }, 2.0 * s - 1.0, std::atan(std::abs(tau)));
  const double half = 0.5 - cached_cbar * tail;
  return 0.5 + (tau >= 0.0 ? half : -half);
}

/// Graded z-mesh on (0, R]: z_j = R (j/M)^p, j = 1..M. The exponent is at
/// least 1/(1+a) (equidistributing the weight singularity for smooth
/// fields); when z1_target > 0 the grading is strengthened so the first
/// level reaches z1_target and resolves trace-scale features.
inline std::vector<double> make_zmesh(int levels, double R, double a,
                                      double z1_target = 0.0) {
  if (levels < 2) throw DomainError("make_zmesh: need at least 2 levels");
  if (R <= 0.0) throw DomainError("make_zmesh: R must be > 0");
  double p = 1.0 / (1.0 + a);
  if (z1_target > 0.0 && z1_target < R)
    p = std::max(p, std::log(R / z1_target) /
                        std::log(static_cast<double>(levels)));
  std::vector<double> z(levels);
  for (int j = 1; j <= levels; ++j)
    z[j - 1] = R * std::pow(static_cast<double>(j) / levels, p);
  return z;
}

/// Function on a truncated half-space box: x-grid of the trace times the
/// graded z-mesh, with level 0 being the trace plane z = 0.
class ExtensionField {
 public:
  ExtensionField() = default;
  ExtensionField(GridFunction base, std::vector<double> zmesh, double s)
      : base_(std::move(base)), zmesh_(std::move(zmesh)), s_(s),
        a_(1.0 - 2.0 * s) {
    values_.assign((zmesh_.size() + 1) * base_.size(), 0.0);
    for (std::size_t i = 0; i < base_.size(); ++i)
      values_[i] = base_.values()[i];
  }

  const GridFunction& base() const { return base_; }
  const std::vector<double>& zmesh() const { return zmesh_; }
  int levels() const { return static_cast<int>(zmesh_.size()); }
  double s() const { return s_; }
  double a() const { return a_; }
  double R() const { return zmesh_.back(); }
  std::size_t size() const { return values_.size(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double z_of_level(int level) const {
    return level == 0 ? 0.0 : zmesh_[level - 1];
  }
  std::size_t index(int level, std::size_t xidx) const {
    return static_cast<std::size_t>(level) * base_.size() + xidx;
  }
  double& at(int level, std::size_t xidx) { return values_[index(level, xidx)]; }
  double at(int level, std::size_t xidx) const {
    return values_[index(level, xidx)];
  }

  /// Exact z^a mass of the z-interval [z_level, z_{level+1}].
  double zweight(int level) const {
    const double z0 = z_of_level(level);
    const double z1 = z_of_level(level + 1);
    return (std::pow(z1, 1.0 + a_) - std::pow(z0, 1.0 + a_)) / (1.0 + a_);
  }

  /// Increment of w = z^{2s} across the z-interval. The z-derivative part of
  /// the weighted energy is int z^a (dU/dz)^2 dz = 2s int (dU/dw)^2 dw, and
  /// the boundary-layer profile z^{2s} is linear in w, so differencing in w
  /// integrates it exactly.
  double wweight(int level) const {
    return std::pow(z_of_level(level + 1), 2.0 * s_) -
           std::pow(z_of_level(level), 2.0 * s_);
  }

  void save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw NumericalError("ExtensionField::save_csv: cannot open " +
                                   path);
    out << "# s=" << s_ << " levels=" << levels() << "\n";
    base_.for_each_index([&](int i, int j, int k) {
      const auto p = base_.point(i, j, k);
      for (int l = 0; l <= levels(); ++l) {
        out << p[0];
        if (base_.dim() > 1) out << "," << p[1];
        out << "," << z_of_level(l) << "," << at(l, base_.index(i, j, k))
            << "\n";
      }
    });
  }

 private:
  GridFunction base_;
  std::vector<double> zmesh_;
  double s_ = 0.5;
  double a_ = 0.0;
  std::vector<double> values_;
};

// ---- cell-based weighted Dirichlet machinery -----------------------------

/// Cell identifier: x-cell (lower corner index) and z-interval level.
struct Cell {
  int ix = 0;
  int iy = 0;
  int level = 0;
};

namespace detail {

template <class F>
void for_each_cell(const ExtensionField& U, F&& f) {
  const auto& b = U.base();
  const int nx = b.shape()[0] - 1;
  const int ny = b.dim() > 1 ? b.shape()[1] - 1 : 1;
  for (int l = 0; l < U.levels(); ++l)
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) f(Cell{i, j, l});
}

/// Cell-averaged gradient of U on a cell: x-components as plain differences,
/// and the z-component taken with respect to w = z^{2s}.
inline void cell_gradient(const ExtensionField& U, const Cell& c,
                          std::array<double, 3>& g) {
  const auto& b = U.base();
  const double h = b.spacing();
  const double dw = U.wweight(c.level);
  if (b.dim() == 1) {
    const std::size_t i0 = b.index(c.ix), i1 = b.index(c.ix + 1);
    const double u00 = U.at(c.level, i0), u10 = U.at(c.level, i1);
    const double u01 = U.at(c.level + 1, i0), u11 = U.at(c.level + 1, i1);
    g[0] = 0.5 * ((u10 - u00) + (u11 - u01)) / h;
    g[1] = 0.0;
    g[2] = 0.5 * ((u01 - u00) + (u11 - u10)) / dw;
    return;
  }
  const std::size_t i00 = b.index(c.ix, c.iy), i10 = b.index(c.ix + 1, c.iy);
  const std::size_t i01 = b.index(c.ix, c.iy + 1),
                    i11 = b.index(c.ix + 1, c.iy + 1);
  double gx = 0.0, gy = 0.0, gz = 0.0;
  for (int l = c.level; l <= c.level + 1; ++l) {
    gx += (U.at(l, i10) - U.at(l, i00)) + (U.at(l, i11) - U.at(l, i01));
    gy += (U.at(l, i01) - U.at(l, i00)) + (U.at(l, i11) - U.at(l, i10));
  }
  for (std::size_t idx : {i00, i10, i01, i11})
    gz += U.at(c.level + 1, idx) - U.at(c.level, idx);
  g[0] = gx / (4.0 * h);
  g[1] = gy / (4.0 * h);
  g[2] = gz / (4.0 * dw);
}

}  // namespace detail

/// int z^a grad(U) . grad(V) over the cells selected by `pred`. The
/// x-derivative terms carry the exact z^a interval mass; the z-derivative
/// terms carry the exact 2s dw mass of the substituted variable.
template <class CellPred>
double dirichlet_bilinear_if(const ExtensionField& U, const ExtensionField& V,
                             CellPred&& pred) {
  const double hn = std::pow(U.base().spacing(), U.base().dim());
  const double twos = 2.0 * U.s();
  double acc = 0.0;
  detail::for_each_cell(U, [&](const Cell& c) {
    if (!pred(c)) return;
    std::array<double, 3> gu, gv;
    detail::cell_gradient(U, c, gu);
    detail::cell_gradient(V, c, gv);
    acc += hn * (U.zweight(c.level) * (gu[0] * gv[0] + gu[1] * gv[1]) +
                 twos * U.wweight(c.level) * gu[2] * gv[2]);
  });
  return acc;
}

inline double dirichlet_bilinear(const ExtensionField& U,
                                 const ExtensionField& V) {
  return dirichlet_bilinear_if(U, V, [](const Cell&) { return true; });
}

/// Axis-aligned region of the half-space box (in physical coordinates).
struct XZBox {
  std::array<double, 3> xlo = {-1e300, -1e300, -1e300};
  std::array<double, 3> xhi = {1e300, 1e300, 1e300};
  double zmax = 1e300;

  bool contains_cell(const ExtensionField& U, const Cell& c) const {
    const auto& b = U.base();
    const double h = b.spacing();
    const double x0 = b.coord(0, c.ix), x1 = x0 + h;
    if (x0 < xlo[0] - 1e-9 * h || x1 > xhi[0] + 1e-9 * h) return false;
    if (b.dim() > 1) {
      const double y0 = b.coord(1, c.iy), y1 = y0 + h;
      if (y0 < xlo[1] - 1e-9 * h || y1 > xhi[1] + 1e-9 * h) return false;
    }
    return U.z_of_level(c.level + 1) <= zmax + 1e-9;
  }
};

/// int z^a |grad U|^2 over an axis-aligned region.
inline double weighted_dirichlet(const ExtensionField& U, const XZBox& region) {
  const auto& b = U.base();
  // reject regions that stick out of the sampled box
  for (int d = 0; d < b.dim(); ++d) {
    if (region.xlo[d] > -1e299 && region.xlo[d] < b.axis_min(d) - 1e-9)
      throw DomainError("weighted_dirichlet: region exceeds sampled box");
    if (region.xhi[d] < 1e299 && region.xhi[d] > b.axis_max(d) + 1e-9)
      throw DomainError("weighted_dirichlet: region exceeds sampled box");
  }
  if (region.zmax < 1e299 && region.zmax > U.R() + 1e-9)
    throw DomainError("weighted_dirichlet: region exceeds sampled box");
  return dirichlet_bilinear_if(U, U, [&](const Cell& c) {
    return region.contains_cell(U, c);
  });
}

inline double weighted_dirichlet(const ExtensionField& U) {
  return dirichlet_bilinear(U, U);
}

// ---- the a-harmonic extension by Poisson convolution ---------------------

namespace detail {

/// Convolution weights w(offset) ~ int_cell P(x-y, z) dy on one z level.
/// Midpoint for z >= 4h, tensor Gauss cell integration below, and a global
/// rescale if the total mass exceeds 1 (it cannot, in exact arithmetic).
inline std::vector<double> poisson_level_weights(const PoissonKernel& k,
                                                 int dim, double h, double z,
                                                 const std::array<int, 3>& ext) {
  const int mx = ext[0], my = dim > 1 ? ext[1] : 0;
  std::vector<double> w((2 * mx + 1) * (2 * my + 1));
  const bool refine = z < 4.0 * h;
  auto kernel = [&](double dx, double dy) {
    return poisson_eval(k, {dx, dy, 0.0}, z);
  };
  double total = 0.0;
  for (int i = -mx; i <= mx; ++i)
    for (int j = -my; j <= my; ++j) {
      double val = 0.0;
      if (!refine) {
        val = kernel(i * h, j * h) * std::pow(h, dim);
      } else if (dim == 1) {
        val = gauss16([&](double t) { return kernel(t, 0.0); }, i * h - 0.5 * h,
                      i * h + 0.5 * h);
      } else {
        val = gauss16(
            [&](double t) {
              return gauss16([&](double u) { return kernel(t, u); },
                             j * h - 0.5 * h, j * h + 0.5 * h);
            },
            i * h - 0.5 * h, i * h + 0.5 * h);
      }
      w[(i + mx) * (2 * my + 1) + (j + my)] = val;
      total += val;
    }
  if (total > 1.0)
    for (auto& x : w) x /= total;
  return w;
}

}  // namespace detail

/// a-harmonic extension of v to the truncated box of height R, by
/// convolution with the Poisson kernel. Constant tails enter exactly; for
/// the layer tail the step part of the trace is extended in closed form and
/// only the (compactly supported in the box) remainder is convolved.
inline ExtensionField extend(const GridFunction& v, double s, double R,
                             int levels) {
  if (v.tail().kind == TailKind::kPeriodic)
    throw ContractError("extend: periodic tail requires extend_periodic");
  if (v.dim() > 2)
    throw ContractError("extend: half-space fields support n in {1,2}");
  if (R <= 0.0) throw DomainError("extend: R must be > 0");
  const PoissonKernel pk = make_poisson_kernel(v.dim(), s);
  ExtensionField U(v, make_zmesh(levels, R, 1.0 - 2.0 * s, 0.25 * v.spacing()),
                   s);

  const double h = v.spacing();
  const int dim = v.dim();
  const std::array<int, 3> ext = {v.shape()[0] - 1,
                                  dim > 1 ? v.shape()[1] - 1 : 0, 0};
  const bool layer = v.tail().kind == TailKind::kConstantPm1;
  const int m = v.tail().monotone_axis;
  const double xc = layer ? 0.5 * (v.axis_min(m) + v.axis_max(m)) : 0.0;
  const double c0 = v.tail().constant;
  auto step = [&](double t) {
    return t > 1e-12 ? 1.0 : (t < -1e-12 ? -1.0 : 0.0);
  };

  for (int l = 1; l <= levels; ++l) {
    const double z = U.z_of_level(l);
    const auto w = detail::poisson_level_weights(pk, dim, h, z, ext);
    const int my = dim > 1 ? ext[1] : 0;
    v.for_each_index([&](int i, int j, int k) {
      if (k > 0) return;
      double acc = 0.0;
      double wsum = 0.0;
      v.for_each_index([&](int yi, int yj, int yk) {
        if (yk > 0) return;
        const double ww =
            w[(i - yi + ext[0]) * (2 * my + 1) + (dim > 1 ? j - yj + my : 0)];
        wsum += ww;
        const double ref =
            layer ? step(v.coord(m, m == 0 ? yi : yj) - xc) : c0;
        acc += ww * (v.at(yi, yj) - ref);
      });
      double value;
      if (!layer) {
        value = c0 + acc; // tail mass carries the constant exactly
      } else {
        const auto p = v.point(i, j);
        value = 2.0 * kernel_cdf_1d(s, (p[m] - xc) / z) - 1.0 + acc;
        if (dim == 2) {
          // lateral strips outside the box: clamped boundary columns against
          // analytic ray integrals of the kernel
          const int lat = 1 - m;
          const double btop = v.axis_max(lat) + 0.5 * h - p[lat];
          const double bbot = p[lat] - (v.axis_min(lat) - 0.5 * h);
          const double zs = pk.cbar * std::pow(z, 2.0 * s);
          for (int q = 0; q < v.shape()[m]; ++q) {
            const double ym = v.coord(m, q);
            const double dm = p[m] - ym;
            const double rr = std::sqrt(dm * dm + z * z);
            const double gtop =
                (m == 0 ? v.at(q, v.shape()[1] - 1) : v.at(v.shape()[0] - 1, q)) -
                step(ym - xc);
            const double gbot =
                (m == 0 ? v.at(q, 0) : v.at(0, q)) - step(ym - xc);
            value += zs * h *
                     (gtop * lateral_ray_integral(rr, btop, s) +
                      gbot * lateral_ray_integral(rr, bbot, s));
          }
        }
      }
      (void)wsum;
      U.at(l, v.index(i, j)) = value;
    });
  }
  return U;
}

/// Extension of a periodic trace via the exact Fourier multiplier
/// (2^{1-s}/Gamma(s)) (|k| z)^s K_s(|k| z) of the Poisson kernel.
inline ExtensionField extend_periodic(const GridFunction& v, double s,
                                      double R, int levels) {
  if (v.tail().kind != TailKind::kPeriodic)
    throw ContractError("extend_periodic: tail must be periodic");
  for (int d = 0; d < v.dim(); ++d)
    if (!is_power_of_two(v.shape()[d]))
      throw ContractError("extend_periodic: grid size must be a power of two");
  ExtensionField U(v, make_zmesh(levels, R, 1.0 - 2.0 * s, 0.25 * v.spacing()),
                   s);
  std::vector<std::complex<double>> vh(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) vh[i] = v.values()[i];
  fftn_inplace(vh, v.shape(), -1);
  const double c = std::pow(2.0, 1.0 - s) / std::tgamma(s);
  for (int l = 1; l <= U.levels(); ++l) {
    const double z = U.z_of_level(l);
    std::vector<std::complex<double>> a = vh;
    const auto& sh = v.shape();
    for (int i = 0; i < sh[0]; ++i)
      for (int j = 0; j < sh[1]; ++j) {
        double k2 = 0.0;
        const std::array<int, 3> mm = {i, j, 0};
        for (int d = 0; d < v.dim(); ++d) {
          const double kd = fft_wavenumber(mm[d], sh[d], v.spacing());
          k2 += kd * kd;
        }
        const double kz = std::sqrt(k2) * z;
        const double mult =
            kz == 0.0 ? 1.0 : c * std::pow(kz, s) * std::cyl_bessel_k(s, kz);
        a[v.index(i, j)] *= mult;
      }
    fftn_inplace(a, v.shape(), +1);
    for (std::size_t i = 0; i < v.size(); ++i) U.at(l, i) = a[i].real();
  }
  return U;
}

// ---- discrete minimization of the weighted Dirichlet energy ---------------

namespace detail {

/// y += alpha * (stiffness matrix of 2*dirichlet_bilinear) * x, restricted
/// to free nodes (interior + trace depending on `trace_free`).
class DirichletStiffness {
 public:
  explicit DirichletStiffness(const ExtensionField& shape) : U_(&shape) {}

  // gradient of D(x) = dirichlet_bilinear(x,x): g = 2 A x
  void gradient(const ExtensionField& x, ExtensionField& g) const {
    std::fill(g.values().begin(), g.values().end(), 0.0);
    const auto& b = x.base();
    const double hn = std::pow(b.spacing(), b.dim());
    const double h = b.spacing();
    detail::for_each_cell(x, [&](const Cell& c) {
      std::array<double, 3> gr;
      detail::cell_gradient(x, c, gr);
      const double W = x.zweight(c.level) * hn;
      const double Wz = 2.0 * x.s() * x.wweight(c.level) * hn;
      const double dw = x.wweight(c.level);
      if (b.dim() == 1) {
        const std::size_t i0 = b.index(c.ix), i1 = b.index(c.ix + 1);
        // d g_x / d node = +-1/(2h); d g_w / d node = +-1/(2dw)
        const double fx = 2.0 * W * gr[0] / (2.0 * h);
        const double fz = 2.0 * Wz * gr[2] / (2.0 * dw);
        g.at(c.level, i0) += -fx - fz;
        g.at(c.level, i1) += fx - fz;
        g.at(c.level + 1, i0) += -fx + fz;
        g.at(c.level + 1, i1) += fx + fz;
      } else {
        const std::size_t i00 = b.index(c.ix, c.iy),
                          i10 = b.index(c.ix + 1, c.iy),
                          i01 = b.index(c.ix, c.iy + 1),
                          i11 = b.index(c.ix + 1, c.iy + 1);
        const double fx = 2.0 * W * gr[0] / (4.0 * h);
        const double fy = 2.0 * W * gr[1] / (4.0 * h);
        const double fz = 2.0 * Wz * gr[2] / (4.0 * dw);
        for (int l = c.level; l <= c.level + 1; ++l) {
          g.at(l, i00) += -fx - fy;
          g.at(l, i10) += fx - fy;
          g.at(l, i01) += -fx + fy;
          g.at(l, i11) += fx + fy;
        }
        for (std::size_t idx : {i00, i10, i01, i11}) {
          g.at(c.level, idx) += -fz;
          g.at(c.level + 1, idx) += fz;
        }
      }
    });
  }

 private:
  const ExtensionField* U_;
};

}  // namespace detail

/// Free-node mask for fields vanishing on the lateral and top faces
/// (L_R and U_R); the trace plane is free iff `trace_free`.
inline std::vector<char> boundary_mask(const ExtensionField& U,
                                       bool trace_free) {
  std::vector<char> free_node(U.size(), 0);
  const auto& b = U.base();
  b.for_each_index([&](int i, int j, int k) {
    if (k > 0) return;
    bool lateral = (i == 0 || i == b.shape()[0] - 1);
    if (b.dim() > 1) lateral = lateral || (j == 0 || j == b.shape()[1] - 1);
    for (int l = 0; l <= U.levels(); ++l) {
      const bool top = (l == U.levels());
      const bool fixed = lateral || top || (l == 0 && !trace_free);
      free_node[U.index(l, b.index(i, j))] = fixed ? 0 : 1;
    }
  });
  return free_node;
}

/// Minimizes dirichlet_bilinear(B + Phi, B + Phi) over Phi with the given
/// fixed values (trace plane and box boundary), by Jacobi-preconditioned
/// conjugate gradients on the free nodes. Phi holds the fixed values on
/// entry and the minimizer on exit. Returns the final residual norm.
inline double minimize_dirichlet(const ExtensionField& B, ExtensionField& Phi,
                                 const std::vector<char>& free_node,
                                 int max_iters, double tol) {
  detail::DirichletStiffness A(Phi);
  ExtensionField g = Phi, tmp = Phi, total = Phi;

  // diagonal of the stiffness operator, for preconditioning: each corner
  // node of a cell sees 2W (d g_d / d node)^2 per gradient component
  std::vector<double> diag(Phi.size(), 0.0);
  {
    const auto& b = Phi.base();
    const double hn = std::pow(b.spacing(), b.dim());
    const double h = b.spacing();
    detail::for_each_cell(Phi, [&](const Cell& c) {
      const double W = Phi.zweight(c.level) * hn;
      const double dw = Phi.wweight(c.level);
      const double Wz = 2.0 * Phi.s() * dw * hn;
      std::vector<std::size_t> xi;
      double dcontrib;
      if (b.dim() == 1) {
        xi = {b.index(c.ix), b.index(c.ix + 1)};
        dcontrib = 2.0 * W / (4.0 * h * h) + 2.0 * Wz / (4.0 * dw * dw);
      } else {
        xi = {b.index(c.ix, c.iy), b.index(c.ix + 1, c.iy),
              b.index(c.ix, c.iy + 1), b.index(c.ix + 1, c.iy + 1)};
        dcontrib = 4.0 * W / (16.0 * h * h) + 2.0 * Wz / (16.0 * dw * dw);
      }
      for (int l = c.level; l <= c.level + 1; ++l)
        for (std::size_t id : xi) diag[Phi.index(l, id)] += dcontrib;
    });
    for (auto& d : diag)
      if (d <= 0.0) d = 1.0;
  }

  // work in the total field B + Phi so the gradient is simply A(B+Phi)
  for (std::size_t i = 0; i < total.size(); ++i)
    total.values()[i] = B.values()[i] + Phi.values()[i];

  auto apply_mask = [&](ExtensionField& f) {
    for (std::size_t i = 0; i < f.size(); ++i)
      if (!free_node[i]) f.values()[i] = 0.0;
  };

  A.gradient(total, g);
  apply_mask(g);
  ExtensionField r = g; // residual = gradient on free nodes
  ExtensionField zf = r;
  for (std::size_t i = 0; i < zf.size(); ++i)
    zf.values()[i] = free_node[i] ? r.values()[i] / diag[i] : 0.0;
  ExtensionField p = zf;
  double rz = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    rz += r.values()[i] * zf.values()[i];
  double res0 = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    res0 += r.values()[i] * r.values()[i];
  res0 = std::sqrt(res0);
  double res = res0;

  for (int it = 0; it < max_iters && res > tol * std::max(res0, 1e-30);
       ++it) {
    A.gradient(p, tmp); // A p (gradient is linear, zero background)
    apply_mask(tmp);
    double pAp = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      pAp += p.values()[i] * tmp.values()[i];
    if (pAp <= 0.0) break;
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < total.size(); ++i)
      if (free_node[i]) total.values()[i] -= alpha * p.values()[i];
    for (std::size_t i = 0; i < r.size(); ++i)
      r.values()[i] -= alpha * tmp.values()[i];
    double rz_new = 0.0;
    res = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double z = free_node[i] ? r.values()[i] / diag[i] : 0.0;
      zf.values()[i] = z;
      rz_new += r.values()[i] * z;
      res += r.values()[i] * r.values()[i];
    }
    res = std::sqrt(res);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < p.size(); ++i)
      p.values()[i] = zf.values()[i] + beta * p.values()[i];
  }

  for (std::size_t i = 0; i < Phi.size(); ++i)
    Phi.values()[i] = total.values()[i] - B.values()[i];
  return res;
}

/// Finite-difference oracle: discrete minimizer of int z^a |grad V|^2 with
/// trace v at z = 0 and zero on the lateral and top faces.
inline ExtensionField harmonic_extension_fd(const GridFunction& v, double s,
                                            double R, int levels,
                                            int max_iters = 2000,
                                            double tol = 1e-10) {
  ExtensionField zero(v, make_zmesh(levels, R, 1.0 - 2.0 * s,
                                    0.25 * v.spacing()),
                      s);
  std::fill(zero.values().begin(), zero.values().end(), 0.0);
  ExtensionField Phi = zero;
  for (std::size_t i = 0; i < v.size(); ++i)
    Phi.values()[i] = v.values()[i]; // trace row
  const auto mask = boundary_mask(Phi, /*trace_free=*/false);
  minimize_dirichlet(zero, Phi, mask, max_iters, tol);
  return Phi;
}

}  // namespace fraclab
