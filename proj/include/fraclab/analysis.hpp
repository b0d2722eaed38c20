#pragma once

// Verification battery on top of the solvers and energies: the stability
// quadratic form of the extended functional, the rescaling instability test
// at the zero state, the half-interval balance integrals of f, sliding
// comparisons of shifted monotone solutions, range-constrained minimality
// trials, clamped competitor gluing with an energy ledger, blow-down
// diagnostics, and fitting a field by a one-dimensional profile.
//
// The glue ledger uses an edge-based quadrature of the weighted Dirichlet
// integral (mean of squared edge differences instead of squared mean), so
// that clamping against constant bounds contracts every term separately and
// the regional decompositions hold edge by edge.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "fraclab/energy.hpp"
#include "fraclab/errors.hpp"
#include "fraclab/extension.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/model.hpp"

namespace fraclab {

namespace detail {

/// Deterministic uniform draw in [0,1); bypasses std distributions so the
/// stream is identical across standard library implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double golden_min(const std::function<double(double)>& f, double a,
                         double b, int iters = 60) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - gr * (b - a); f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + gr * (b - a); f2 = f(x2);
    }
  }
  return f1 < f2 ? x1 : x2;
}

}  // namespace detail

// ---- stability quadratic form ---------------------------------------------

/// Quadratic form of the extended functional at u: test functions are
/// half-space fields vanishing on the lateral and top faces of their box.
struct StabilityForm {
  GridFunction u;
  double s = 0.5;
  Nonlinearity nl;
  double tilde_c = 0.0; // calibrated constant in front of the Dirichlet part
};

inline StabilityForm make_stability_form(
    const GridFunction& u, double s,
    const Nonlinearity& nl = make_cubic_nonlinearity()) {
  StabilityForm sf;
  sf.u = u;
  sf.s = s;
  sf.nl = nl;
  sf.tilde_c = 2.0 / compatibility_constant(u.dim(), s);
  return sf;
}

namespace detail {

inline void require_compact_support(const ExtensionField& zeta,
                                    const char* who) {
  const auto& b = zeta.base();
  b.for_each_index([&](int i, int j, int k) {
    if (k > 0) return;
    bool lateral = (i == 0 || i == b.shape()[0] - 1);
    if (b.dim() > 1) lateral = lateral || (j == 0 || j == b.shape()[1] - 1);
    const std::size_t id = b.index(i, j);
    if (lateral)
      for (int l = 0; l <= zeta.levels(); ++l)
        if (zeta.at(l, id) != 0.0)
          throw ContractError(std::string(who) +
                              ": test function must vanish on the lateral "
                              "faces");
    if (zeta.at(zeta.levels(), id) != 0.0)
      throw ContractError(std::string(who) +
                          ": test function must vanish on the top face");
  });
}

}  // namespace detail

/// Symmetric bilinear version of the form (its diagonal is the quadratic
/// form below): tilde_c int z^a grad(zeta).grad(eta) + int F''(u) zeta eta.
inline double stability_form_bilinear(const StabilityForm& sf,
                                      const ExtensionField& zeta,
                                      const ExtensionField& eta) {
  detail::require_compact_support(zeta, "stability_form_bilinear");
  detail::require_compact_support(eta, "stability_form_bilinear");
  const auto& b = zeta.base();
  const double hn = std::pow(b.spacing(), b.dim());
  double pot = 0.0;
  b.for_each_index([&](int i, int j, int k) {
    if (k > 0) return;
    const std::size_t id = b.index(i, j);
    if (zeta.at(0, id) == 0.0 || eta.at(0, id) == 0.0) return;
    const double ux = sf.u.eval(b.point(i, j));
    pot += hn * potential_second(sf.nl, ux) * zeta.at(0, id) * eta.at(0, id);
  });
  return sf.tilde_c * dirichlet_bilinear(zeta, eta) + pot;
}

inline double stability_form_eval(const StabilityForm& sf,
                                  const ExtensionField& zeta) {
  detail::require_compact_support(zeta, "stability_form_eval");
  const auto& b = zeta.base();
  const double hn = std::pow(b.spacing(), b.dim());
  double pot = 0.0;
  b.for_each_index([&](int i, int j, int k) {
    if (k > 0) return;
    const double z0 = zeta.at(0, b.index(i, j));
    if (z0 == 0.0) return;
    const double ux = sf.u.eval(b.point(i, j));
    pot += hn * potential_second(sf.nl, ux) * z0 * z0;
  });
  return sf.tilde_c * weighted_dirichlet(zeta) + pot;
}

/// Positive normalization for relative statements about the form: the same
/// expression with |F''| in place of F''.
inline double stability_norm(const StabilityForm& sf,
                             const ExtensionField& zeta) {
  const auto& b = zeta.base();
  const double hn = std::pow(b.spacing(), b.dim());
  double pot = 0.0;
  b.for_each_index([&](int i, int j, int k) {
    if (k > 0) return;
    const double z0 = zeta.at(0, b.index(i, j));
    if (z0 == 0.0) return;
    const double ux = sf.u.eval(b.point(i, j));
    pot += hn * std::abs(potential_second(sf.nl, ux)) * z0 * z0;
  });
  return sf.tilde_c * weighted_dirichlet(zeta) + pot;
}

// ---- rescaling instability at the zero state -------------------------------

/// psi_eps(x,z) = psi(eps x, eps z), realized exactly by rescaling the mesh
/// geometry of psi by 1/eps (values unchanged), so the scaling laws of the
/// two terms hold exactly in the discrete quadrature as well.
inline ExtensionField rescale_extension(const ExtensionField& psi,
                                        double eps) {
  if (eps <= 0.0) throw DomainError("rescale_extension: eps must be > 0");
  const GridFunction& b = psi.base();
  std::array<double, 3> origin = b.origin();
  for (int d = 0; d < b.dim(); ++d) origin[d] /= eps;
  GridFunction nb(b.dim(), b.shape(), b.spacing() / eps, origin, b.tail());
  nb.values() = b.values();
  std::vector<double> z = psi.zmesh();
  for (double& zz : z) zz /= eps;
  ExtensionField out(nb, z, psi.s());
  out.values() = psi.values();
  return out;
}

struct RescalingRow {
  double eps = 0.0;
  double dirichlet_term = 0.0;
  double potential_term = 0.0;
  double value = 0.0;
};

struct RescalingReport {
  std::vector<RescalingRow> rows;
  double dirichlet_exponent = 0.0; // fitted slope of log(dirichlet) vs log(eps)
  double potential_exponent = 0.0; // fitted slope of log(-potential) vs log(eps)
};

namespace detail {

inline double loglog_slope(const std::vector<double>& x,
                           const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/// Evaluates the stability form at u = 0 on the rescaled family psi_eps.
/// The Dirichlet term scales like eps^{2s-n} and the (negative) potential
/// term like eps^{-n}; for small eps the form goes negative.
inline RescalingReport rescaling_instability_test(
    double s, const ExtensionField& psi, const std::vector<double>& eps_list,
    const Nonlinearity& nl = make_cubic_nonlinearity()) {
  detail::require_compact_support(psi, "rescaling_instability_test");
  const int n = psi.base().dim();
  const double tilde_c = 2.0 / compatibility_constant(n, s);
  const double fp0 = nl.f_prime(0.0); // F''(0) = -f'(0)
  const double hn = std::pow(psi.base().spacing(), n);
  double trace_l2 = 0.0;
  for (std::size_t i = 0; i < psi.base().size(); ++i)
    trace_l2 += hn * psi.at(0, i) * psi.at(0, i);
  const double dir0 = tilde_c * weighted_dirichlet(psi);

  RescalingReport rep;
  std::vector<double> eps_pos, dvals, pvals;
  for (double eps : eps_list) {
    RescalingRow row;
    row.eps = eps;
    const ExtensionField pe = rescale_extension(psi, eps);
    row.dirichlet_term = tilde_c * weighted_dirichlet(pe);
    row.potential_term = -fp0 * std::pow(eps, -n) * trace_l2;
    row.value = row.dirichlet_term + row.potential_term;
    rep.rows.push_back(row);
    if (row.dirichlet_term > 0.0 && row.potential_term < 0.0) {
      eps_pos.push_back(eps);
      dvals.push_back(row.dirichlet_term);
      pvals.push_back(-row.potential_term);
    }
  }
  (void)dir0;
  if (eps_pos.size() >= 2) {
    rep.dirichlet_exponent = detail::loglog_slope(eps_pos, dvals);
    rep.potential_exponent = detail::loglog_slope(eps_pos, pvals);
  }
  return rep;
}

// ---- half-interval balance integrals of f ----------------------------------

enum class GBranch { kMinus, kPlus }; // -1 -> 0 and 0 -> +1 connections

/// int of f over the branch interval; a nonzero value rules out a monotone
/// connection between the corresponding pair of zeros of f.
inline double g_balance(const Nonlinearity& nl, GBranch branch) {
  return branch == GBranch::kPlus ? integrate(nl.f, 0.0, 1.0, 1e-12)
                                  : integrate(nl.f, -1.0, 0.0, 1e-12);
}

// ---- sliding comparisons ----------------------------------------------------

struct SlidingRow {
  double k = 0.0;
  double min_gap = 0.0; // min over grid nodes of w_k - w_o
  std::array<double, 3> argmin = {0.0, 0.0, 0.0};
};

struct SlidingReport {
  std::vector<SlidingRow> rows;
  bool dominated = false;
  double k_star = 0.0; // smallest grid k with w_k >= w_o everywhere
  std::array<double, 3> touching = {0.0, 0.0, 0.0};
  std::string note;
};

/// w_k(x) = u(x + k e_m) by shift-with-tail along the monotone axis m.
/// Reports the domination threshold on the given k grid and the touching
/// point (the argmin of the gap) as k decreases to it.
inline SlidingReport sliding_verify(const GridFunction& u,
                                    const GridFunction& w_o,
                                    std::vector<double> k_grid) {
  if (u.tail().kind != TailKind::kConstantPm1)
    throw ContractError("sliding_verify: u must declare a monotone layer tail");
  if (u.dim() != w_o.dim() || u.shape() != w_o.shape() ||
      u.spacing() != w_o.spacing() || u.origin() != w_o.origin())
    throw ContractError("sliding_verify: u and w_o must share one grid");
  std::sort(k_grid.begin(), k_grid.end());
  const int m = u.tail().monotone_axis;
  SlidingReport rep;
  rep.k_star = std::numeric_limits<double>::quiet_NaN();
  for (double k : k_grid) {
    SlidingRow row;
    row.k = k;
    row.min_gap = 1e300;
    u.for_each_index([&](int i, int j, int kk) {
      auto p = u.point(i, j, kk);
      auto q = p;
      q[m] += k;
      const double gap = u.eval(q) - w_o.at(i, j, kk);
      if (gap < row.min_gap) {
        row.min_gap = gap;
        row.argmin = p;
      }
    });
    rep.rows.push_back(row);
    if (!rep.dominated && row.min_gap >= -1e-12) {
      rep.dominated = true;
      rep.k_star = k;
      rep.touching = row.argmin;
    }
  }
  if (!rep.dominated) rep.note = "no domination at grid resolution";
  return rep;
}

// ---- range-constrained minimality trials ------------------------------------

struct MinimalityTrialRow {
  int trial = 0;
  bool admissible = false;
  double scale = 0.0; // amplitude rescaling applied to reach 0.9 headroom
  double value = 0.0; // full functional difference
};

struct MinimalityReport {
  std::vector<MinimalityTrialRow> rows;
  int admissible_count = 0;
  double min_value = std::numeric_limits<double>::infinity();
};

namespace detail {

inline double profile_bound_at(const GridFunction& prof,
                               const GridFunction& u,
                               const std::array<double, 3>& p) {
  if (u.dim() == 2 && u.tail().kind == TailKind::kConstantPm1 &&
      prof.dim() == 1) {
    const int lat = 1 - u.tail().monotone_axis;
    return prof.eval({p[lat], 0.0, 0.0});
  }
  return prof.eval(p);
}

}  // namespace detail

/// Random smooth perturbations phi with u + phi between the under/over
/// profiles (amplitudes rescaled to 0.9 of the pointwise headroom); each
/// admissible trial evaluates the full renormalized functional difference.
/// `collar` keeps the support away from the frozen boundary band of u.
inline MinimalityReport constrained_minimality_test(
    const GridFunction& u, const GridFunction& under, const GridFunction& over,
    double s, double R, int trials, std::uint64_t seed = 1234,
    const Nonlinearity& nl = make_cubic_nonlinearity(), int collar = 6) {
  MinimalityReport rep;
  const double h = u.spacing();
  std::array<double, 2> lo{}, hi{};
  for (int d = 0; d < u.dim(); ++d) {
    lo[d] = std::max(-R + 2.0 * h, u.axis_min(d) + (collar + 1) * h);
    hi[d] = std::min(R - 2.0 * h, u.axis_max(d) - (collar + 1) * h);
    if (lo[d] >= hi[d])
      return rep; // profiles/box too tight: report with 0 trials
  }
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(t) * 0x9e3779b97f4a7c15ull);
    MinimalityTrialRow row;
    row.trial = t;
    GridFunction phi(u.dim(), u.shape(), h, u.origin(),
                     TailModel::Constant(0.0));
    const int nb = 1 + static_cast<int>(detail::uniform01(rng) * 3.0);
    for (int b = 0; b < nb; ++b) {
      std::array<double, 3> c = {0.0, 0.0, 0.0};
      double rmax = 1e300;
      for (int d = 0; d < u.dim(); ++d) {
        c[d] = lo[d] + detail::uniform01(rng) * (hi[d] - lo[d]);
        rmax = std::min({rmax, c[d] - (lo[d] - 1.5 * h),
                         (hi[d] + 1.5 * h) - c[d]});
      }
      const double rad =
          std::min(rmax, 2.0 * h + detail::uniform01(rng) *
                                       std::max(0.3 * R - 2.0 * h, h));
      const double amp = 2.0 * detail::uniform01(rng) - 1.0;
      const GridFunction bump = make_compact_bump(u, c, rad, amp);
      for (std::size_t i = 0; i < phi.size(); ++i)
        phi.values()[i] += bump.values()[i];
    }
    // rescale to 0.9 of the pointwise headroom within [under, over]
    double scale = 1e300;
    u.for_each_index([&](int i, int j, int k) {
      const double p = phi.at(i, j, k);
      if (p == 0.0) return;
      const auto x = u.point(i, j, k);
      const double room =
          p > 0.0 ? detail::profile_bound_at(over, u, x) - u.at(i, j, k)
                  : u.at(i, j, k) - detail::profile_bound_at(under, u, x);
      scale = std::min(scale, room / std::abs(p));
    });
    if (!(scale > 0.0)) {
      row.admissible = false; // u touches a profile inside the support
      rep.rows.push_back(row);
      continue;
    }
    scale = std::min(0.9 * scale, 1.0);
    for (double& x : phi.values()) x *= scale;
    row.scale = scale;
    row.admissible = true;
    row.value = full_functional_difference(u, phi, s, R, nl).value;
    rep.rows.push_back(row);
    ++rep.admissible_count;
    rep.min_value = std::min(rep.min_value, row.value);
  }
  return rep;
}

// ---- edge-based local functional and competitor gluing -----------------------

namespace detail {

/// Visits every edge of the half-space mesh with its quadrature weight; the
/// cell Dirichlet mass is split evenly over the parallel edges (mean of
/// squared differences), so each edge carries an independent positive term.
template <class F>
void for_each_edge(const ExtensionField& U, F&& visit) {
  const auto& b = U.base();
  const double hn = std::pow(b.spacing(), b.dim());
  const double h = b.spacing();
  const double twos = 2.0 * U.s();
  for_each_cell(U, [&](const Cell& c) {
    const double wz = U.zweight(c.level);
    const double dw = U.wweight(c.level);
    const double wx = hn * wz / (h * h);
    const double ww = hn * twos * dw / (dw * dw);
    if (b.dim() == 1) {
      const std::size_t i0 = b.index(c.ix), i1 = b.index(c.ix + 1);
      for (int l = c.level; l <= c.level + 1; ++l)
        visit(U.index(l, i0), U.index(l, i1), 0.5 * wx);
      for (std::size_t id : {i0, i1})
        visit(U.index(c.level, id), U.index(c.level + 1, id), 0.5 * ww);
    } else {
      const std::size_t i00 = b.index(c.ix, c.iy),
                        i10 = b.index(c.ix + 1, c.iy),
                        i01 = b.index(c.ix, c.iy + 1),
                        i11 = b.index(c.ix + 1, c.iy + 1);
      for (int l = c.level; l <= c.level + 1; ++l) {
        visit(U.index(l, i00), U.index(l, i10), 0.25 * wx);
        visit(U.index(l, i01), U.index(l, i11), 0.25 * wx);
        visit(U.index(l, i00), U.index(l, i01), 0.25 * wx);
        visit(U.index(l, i10), U.index(l, i11), 0.25 * wx);
      }
      for (std::size_t id : {i00, i10, i01, i11})
        visit(U.index(c.level, id), U.index(c.level + 1, id), 0.25 * ww);
    }
  });
}

}  // namespace detail

/// Edge-based weighted Dirichlet energy (same integral as weighted_dirichlet,
/// with the squared mean replaced by the mean of squares across each cell).
inline double edge_dirichlet(const ExtensionField& U) {
  double acc = 0.0;
  detail::for_each_edge(U, [&](std::size_t a, std::size_t b, double w) {
    const double d = U.values()[b] - U.values()[a];
    acc += w * d * d;
  });
  return acc;
}

/// Local extended functional used by the gluing chain:
///   G(V) = (1/kappa) * edge_dirichlet(V) + sum over trace nodes of h^n F(V).
inline double extended_functional(const ExtensionField& V,
                                  const Nonlinearity& nl, double kappa) {
  const auto& b = V.base();
  const double hn = std::pow(b.spacing(), b.dim());
  double pot = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i)
    pot += hn * potential(nl, V.at(0, i));
  return edge_dirichlet(V) / kappa + pot;
}

/// Discrete critical point of the local extended functional with the lateral
/// and top faces frozen and the trace free, by Newton steps with an inner
/// preconditioned conjugate gradient solve. Returns the sup norm of the
/// remaining free-node gradient.
inline double polish_extension(ExtensionField& V, const Nonlinearity& nl,
                               double kappa, int newton_iters = 30,
                               double tol = 1e-11) {
  const auto& b = V.base();
  const double hn = std::pow(b.spacing(), b.dim());
  const std::vector<char> free_node = boundary_mask(V, /*trace_free=*/true);
  const std::size_t n = V.size();

  std::vector<double> diag(n, 0.0);
  detail::for_each_edge(V, [&](std::size_t a, std::size_t bb, double w) {
    diag[a] += 2.0 * w / kappa;
    diag[bb] += 2.0 * w / kappa;
  });

  auto gradient = [&](const std::vector<double>& x, std::vector<double>& g) {
    std::fill(g.begin(), g.end(), 0.0);
    detail::for_each_edge(V, [&](std::size_t a, std::size_t bb, double w) {
      const double d = x[bb] - x[a];
      g[bb] += 2.0 * w * d / kappa;
      g[a] -= 2.0 * w * d / kappa;
    });
    for (std::size_t i = 0; i < b.size(); ++i)
      g[i] += -hn * nl.f(x[i]); // F' = -f on the trace
    for (std::size_t i = 0; i < n; ++i)
      if (!free_node[i]) g[i] = 0.0;
  };

  // linearized operator at the current trace: A y = edge stiffness / kappa
  // plus -f'(x) h^n on the trace, restricted to free nodes
  std::vector<double> fp(b.size(), 0.0);
  auto apply = [&](const std::vector<double>& y, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    detail::for_each_edge(V, [&](std::size_t a, std::size_t bb, double w) {
      const double d = y[bb] - y[a];
      out[bb] += 2.0 * w * d / kappa;
      out[a] -= 2.0 * w * d / kappa;
    });
    for (std::size_t i = 0; i < b.size(); ++i) out[i] += -fp[i] * hn * y[i];
    for (std::size_t i = 0; i < n; ++i)
      if (!free_node[i]) out[i] = 0.0;
  };

  std::vector<double> g(n), step(n), r(n), z(n), p(n), Ap(n);
  double res = 0.0;
  for (int it = 0; it < newton_iters; ++it) {
    gradient(V.values(), g);
    res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(g[i]));
    if (res <= tol) break;
    for (std::size_t i = 0; i < b.size(); ++i)
      fp[i] = nl.f_prime(V.at(0, i));
    // inner PCG on A step = g
    std::fill(step.begin(), step.end(), 0.0);
    r = g;
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dcap = diag[i] + std::abs(fp[i] < 0.0 ? fp[i] * hn : 0.0);
      z[i] = free_node[i] ? r[i] / std::max(dcap, 1e-300) : 0.0;
      rz += r[i] * z[i];
    }
    p = z;
    for (int k = 0; k < 400; ++k) {
      apply(p, Ap);
      double pAp = 0.0;
      for (std::size_t i = 0; i < n; ++i) pAp += p[i] * Ap[i];
      if (pAp <= 0.0) break; // indefinite direction: fall back to gradient
      const double alpha = rz / pAp;
      double rn = 0.0, rz_new = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        step[i] += alpha * p[i];
        r[i] -= alpha * Ap[i];
        const double dcap = diag[i] + std::abs(fp[i] < 0.0 ? fp[i] * hn : 0.0);
        z[i] = free_node[i] ? r[i] / std::max(dcap, 1e-300) : 0.0;
        rz_new += r[i] * z[i];
        rn = std::max(rn, std::abs(r[i]));
      }
      if (rn <= 0.01 * res || rn <= 0.1 * tol) break;
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    // damped update with energy backtracking
    double tau = 1.0;
    const double e0 = extended_functional(V, nl, kappa);
    std::vector<double> save = V.values();
    for (int bt = 0; bt < 30; ++bt) {
      for (std::size_t i = 0; i < n; ++i)
        if (free_node[i]) V.values()[i] = save[i] - tau * step[i];
      if (extended_functional(V, nl, kappa) <= e0 + 1e-15 * std::abs(e0))
        break;
      tau *= 0.5;
    }
  }
  gradient(V.values(), g);
  res = 0.0;
  for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(g[i]));
  return res;
}

struct GlueLedgerRow {
  std::string region;
  std::string field;
  double energy = 0.0;
  double bound = 0.0;
  double slack = 0.0; // energy - bound
};

struct GluedCompetitor {
  ExtensionField alpha; // max(E_u + Psi, E_over_star)
  ExtensionField beta;  // clamp(E_u + Psi, E_under_star, E_over_star)
  ExtensionField gamma; // min(E_u + Psi, E_under_star)
  std::vector<std::uint8_t> node_region; // 1 above, 2 below, 0 middle
  std::vector<GlueLedgerRow> ledger;
  double total_difference = 0.0; // G(E_u + Psi) - G(E_u)
  double min_slack = 0.0;
};

/// Builds the clamped competitors for the perturbed extension t = E_u + Psi
/// and emits the five-line energy ledger of the gluing chain:
///   1. G(t) >= G_r1(alpha) + G_mid(beta) + G_r2(gamma)   (edge contraction)
///   2. G_r1(alpha) >= G_r1(E_over_star)                  (region 1)
///   3. G_r2(gamma) >= G_r2(E_under_star)                 (region 2)
///   4. G_r1(E_over*) + G_mid(beta) + G_r2(E_under*) = G(beta)  (identity)
///   5. G(beta) >= G(E_u) - slack                         (constrained
///      minimality of the polished extension)
/// Regions are node sets {t > over}, {t < under}; an edge belongs to a side
/// region only when both endpoints do, so beta coincides with the side
/// fields there and line 4 is exact.
inline GluedCompetitor glue_competitors(
    const ExtensionField& Eu, const ExtensionField& Psi,
    const ExtensionField& Eunder, const ExtensionField& Eover,
    const Nonlinearity& nl, double kappa) {
  const std::size_t n = Eu.size();
  if (Psi.size() != n || Eunder.size() != n || Eover.size() != n)
    throw ContractError("glue_competitors: fields must share one mesh");
  for (std::size_t i = 0; i < n; ++i)
    if (Eunder.values()[i] > Eover.values()[i] + 1e-14)
      throw DomainError(
          "glue_competitors: profile extensions are not ordered");
  detail::require_compact_support(Psi, "glue_competitors");

  GluedCompetitor out;
  out.alpha = Eu;
  out.beta = Eu;
  out.gamma = Eu;
  out.node_region.assign(n, 0);
  ExtensionField t = Eu;
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = Eu.values()[i] + Psi.values()[i];
    const double A = Eover.values()[i], B = Eunder.values()[i];
    t.values()[i] = ti;
    out.alpha.values()[i] = std::max(ti, A);
    out.gamma.values()[i] = std::min(ti, B);
    out.beta.values()[i] = std::clamp(ti, B, A);
    out.node_region[i] = ti > A ? 1 : (ti < B ? 2 : 0);
  }

  // regional energies: Dirichlet edges by the both-endpoint rule, trace
  // potential by the node region
  auto regional = [&](const ExtensionField& V, int region) {
    double acc = 0.0;
    detail::for_each_edge(V, [&](std::size_t a, std::size_t b, double w) {
      int er = 0;
      if (out.node_region[a] == 1 && out.node_region[b] == 1) er = 1;
      else if (out.node_region[a] == 2 && out.node_region[b] == 2) er = 2;
      if (er != region) return;
      const double d = V.values()[b] - V.values()[a];
      acc += w * d * d;
    });
    acc /= kappa;
    const auto& base = V.base();
    const double hn = std::pow(base.spacing(), base.dim());
    for (std::size_t i = 0; i < base.size(); ++i)
      if (out.node_region[i] == region) acc += hn * potential(nl, V.at(0, i));
    return acc;
  };

  const double Gt = extended_functional(t, nl, kappa);
  const double Gu = extended_functional(Eu, nl, kappa);
  const double Gbeta = extended_functional(out.beta, nl, kappa);
  const double a1 = regional(out.alpha, 1);
  const double bmid = regional(out.beta, 0);
  const double g2 = regional(out.gamma, 2);
  const double over1 = regional(Eover, 1);
  const double under2 = regional(Eunder, 2);

  out.ledger.push_back({"box", "E_u+Psi", Gt, a1 + bmid + g2, Gt - (a1 + bmid + g2)});
  out.ledger.push_back({"region1", "alpha", a1, over1, a1 - over1});
  out.ledger.push_back({"region2", "gamma", g2, under2, g2 - under2});
  out.ledger.push_back({"box", "beta", over1 + bmid + under2, Gbeta,
                        over1 + bmid + under2 - Gbeta});
  out.ledger.push_back({"box", "E_u", Gbeta, Gu, Gbeta - Gu});
  out.total_difference = Gt - Gu;
  out.min_slack = 1e300;
  for (const auto& row : out.ledger)
    out.min_slack = std::min(out.min_slack, row.slack);
  return out;
}

inline void write_glue_ledger_csv(const GluedCompetitor& gc,
                                  const std::string& path) {
  std::ofstream outf(path);
  if (!outf)
    throw NumericalError("write_glue_ledger_csv: cannot open " + path);
  outf.precision(17);
  outf << "region,field,energy,bound,slack\n";
  for (const auto& row : gc.ledger)
    outf << row.region << "," << row.field << "," << row.energy << ","
         << row.bound << "," << row.slack << "\n";
}

// ---- blow-down diagnostics ---------------------------------------------------

struct BlowdownRow {
  double eps = 0.0;
  double l1_distance = 0.0; // window-averaged |u_eps - best step|
  std::array<double, 3> omega = {1.0, 0.0, 0.0};
  double offset = 0.0;      // c in sign(omega . x - c)
  double levelset_dev = 0.0; // max |omega . x - c| over zero crossings
};

namespace detail {

inline std::array<double, 3> unit_direction(int dim, double theta,
                                            double phi) {
  if (dim == 1) return {theta >= 0.0 ? 1.0 : -1.0, 0.0, 0.0};
  if (dim == 2) return {std::cos(theta), std::sin(theta), 0.0};
  return {std::sin(phi) * std::cos(theta), std::sin(phi) * std::sin(theta),
          std::cos(phi)};
}

}  // namespace detail

/// Rescaled field u_eps(x) = u(x / eps) on a fixed unit window, its L1
/// distance to the best fitted step sign(omega . x - c), and the deviation
/// of the zero level set from the fitted hyperplane.
inline std::vector<BlowdownRow> blowdown(const GridFunction& u,
                                         const std::vector<double>& eps_list,
                                         int window_pts = 65) {
  const int n = u.dim();
  std::array<int, 3> shape = {window_pts, n > 1 ? window_pts : 1,
                              n > 2 ? window_pts : 1};
  const double hw = 2.0 / (window_pts - 1);
  GridFunction w(n, shape, hw, {-1.0, -1.0, -1.0}, TailModel::Constant(0.0));
  std::vector<BlowdownRow> rows;
  for (double eps : eps_list) {
    w.for_each_index([&](int i, int j, int k) {
      auto p = w.point(i, j, k);
      for (int d = 0; d < n; ++d) p[d] /= eps;
      w.at(i, j, k) = u.eval(p);
    });
    const double cap = 2.0 * std::sqrt(static_cast<double>(n));
    auto l1_for = [&](const std::array<double, 3>& om, double c) {
      double acc = 0.0;
      w.for_each_index([&](int i, int j, int k) {
        const auto p = w.point(i, j, k);
        double t = -c;
        for (int d = 0; d < n; ++d) t += om[d] * p[d];
        acc += std::abs(w.at(i, j, k) - (t >= 0.0 ? 1.0 : -1.0));
      });
      return acc / static_cast<double>(w.size());
    };
    auto best_c = [&](const std::array<double, 3>& om) {
      return detail::golden_min([&](double c) { return l1_for(om, c); }, -cap,
                                cap, 48);
    };
    BlowdownRow row;
    row.eps = eps;
    if (n == 1) {
      const double cp = best_c({1.0, 0.0, 0.0});
      const double cm = best_c({-1.0, 0.0, 0.0});
      if (l1_for({1.0, 0.0, 0.0}, cp) <= l1_for({-1.0, 0.0, 0.0}, cm)) {
        row.omega = {1.0, 0.0, 0.0};
        row.offset = cp;
      } else {
        row.omega = {-1.0, 0.0, 0.0};
        row.offset = cm;
      }
    } else {
      double best = 1e300, best_theta = 0.0;
      const int steps = 360;
      for (int a = 0; a < steps; ++a) {
        const double theta = 2.0 * std::numbers::pi * a / steps;
        const auto om = detail::unit_direction(n, theta, 0.5 * std::numbers::pi);
        const double c = best_c(om);
        const double v = l1_for(om, c);
        if (v < best) {
          best = v;
          best_theta = theta;
        }
      }
      const double span = 2.0 * std::numbers::pi / steps;
      const double theta = detail::golden_min(
          [&](double th) {
            const auto om = detail::unit_direction(n, th, 0.5 * std::numbers::pi);
            return l1_for(om, best_c(om));
          },
          best_theta - span, best_theta + span, 40);
      row.omega = detail::unit_direction(n, theta, 0.5 * std::numbers::pi);
      row.offset = best_c(row.omega);
    }
    row.l1_distance = l1_for(row.omega, row.offset);
    // zero crossings along grid edges vs the fitted hyperplane
    double dev = 0.0;
    w.for_each_index([&](int i, int j, int k) {
      const std::array<int, 3> idx = {i, j, k};
      for (int d = 0; d < n; ++d) {
        std::array<int, 3> q = idx;
        q[d] += 1;
        if (q[d] >= shape[d]) continue;
        const double v0 = w.at(i, j, k), v1 = w.at(q[0], q[1], q[2]);
        if (v0 == 0.0 || v0 * v1 >= 0.0) continue;
        const double frac = v0 / (v0 - v1);
        auto p = w.point(i, j, k);
        p[d] += frac * hw;
        double t = -row.offset;
        for (int dd = 0; dd < n; ++dd) t += row.omega[dd] * p[dd];
        dev = std::max(dev, std::abs(t));
      }
    });
    row.levelset_dev = dev;
    rows.push_back(row);
  }
  return rows;
}

// ---- one-dimensional structure fitting ---------------------------------------

struct Fit1DResult {
  std::array<double, 3> omega = {1.0, 0.0, 0.0};
  GridFunction profile;
  double residual = 0.0; // sup norm of u - profile(omega . x)
};

/// Finds the unit direction minimizing the variance of u on the level planes
/// of omega . x (coarse angle grid, then golden-section refinement), and
/// returns the plane-averaged profile along it.
inline Fit1DResult fit_1d(const GridFunction& u) {
  const int n = u.dim();
  if (n < 2 || n > 3) throw DomainError("fit_1d: dim must be 2 or 3");
  const double h = u.spacing();

  auto plane_variance = [&](const std::array<double, 3>& om,
                            std::vector<double>* means = nullptr,
                            double* tmin_out = nullptr) {
    double tmin = 1e300, tmax = -1e300;
    u.for_each_index([&](int i, int j, int k) {
      const auto p = u.point(i, j, k);
      double t = 0.0;
      for (int d = 0; d < n; ++d) t += om[d] * p[d];
      tmin = std::min(tmin, t);
      tmax = std::max(tmax, t);
    });
    const int nbins = std::max(2, static_cast<int>((tmax - tmin) / h) + 1);
    std::vector<double> sum(nbins, 0.0), cnt(nbins, 0.0);
    u.for_each_index([&](int i, int j, int k) {
      const auto p = u.point(i, j, k);
      double t = 0.0;
      for (int d = 0; d < n; ++d) t += om[d] * p[d];
      const int b = std::min(nbins - 1,
                             static_cast<int>((t - tmin) / h + 0.5));
      sum[b] += u.at(i, j, k);
      cnt[b] += 1.0;
    });
    for (int b = 0; b < nbins; ++b)
      if (cnt[b] > 0.0) sum[b] /= cnt[b];
    // fill empty bins from neighbors
    for (int b = 0; b < nbins; ++b)
      if (cnt[b] == 0.0) {
        int l = b - 1, r = b + 1;
        while (l >= 0 && cnt[l] == 0.0) --l;
        while (r < nbins && cnt[r] == 0.0) ++r;
        if (l >= 0 && r < nbins) sum[b] = 0.5 * (sum[l] + sum[r]);
        else if (l >= 0) sum[b] = sum[l];
        else if (r < nbins) sum[b] = sum[r];
      }
    double var = 0.0;
    u.for_each_index([&](int i, int j, int k) {
      const auto p = u.point(i, j, k);
      double t = 0.0;
      for (int d = 0; d < n; ++d) t += om[d] * p[d];
      const int b = std::min(nbins - 1,
                             static_cast<int>((t - tmin) / h + 0.5));
      const double d0 = u.at(i, j, k) - sum[b];
      var += d0 * d0;
    });
    if (means) *means = sum;
    if (tmin_out) *tmin_out = tmin;
    return var / static_cast<double>(u.size());
  };

  double best = 1e300, best_theta = 0.0, best_phi = 0.5 * std::numbers::pi;
  if (n == 2) {
    const int steps = 360; // one-degree coarse grid
    for (int a = 0; a < steps; ++a) {
      const double theta = 2.0 * std::numbers::pi * a / steps;
      const double v = plane_variance(detail::unit_direction(2, theta, 0.0));
      if (v < best) {
        best = v;
        best_theta = theta;
      }
    }
    const double span = 2.0 * std::numbers::pi / steps;
    best_theta = detail::golden_min(
        [&](double th) {
          return plane_variance(detail::unit_direction(2, th, 0.0));
        },
        best_theta - span, best_theta + span, 48);
  } else {
    const int steps = 60; // six-degree coarse grid on the sphere
    for (int a = 0; a < steps; ++a)
      for (int bb = 1; bb < steps / 2; ++bb) {
        const double theta = 2.0 * std::numbers::pi * a / steps;
        const double phi = std::numbers::pi * bb / (steps / 2);
        const double v =
            plane_variance(detail::unit_direction(3, theta, phi));
        if (v < best) {
          best = v;
          best_theta = theta;
          best_phi = phi;
        }
      }
    for (int round = 0; round < 3; ++round) {
      const double span = 2.0 * std::numbers::pi / steps;
      best_theta = detail::golden_min(
          [&](double th) {
            return plane_variance(detail::unit_direction(3, th, best_phi));
          },
          best_theta - span, best_theta + span, 40);
      best_phi = detail::golden_min(
          [&](double ph) {
            return plane_variance(detail::unit_direction(3, best_theta, ph));
          },
          best_phi - span, best_phi + span, 40);
    }
  }

  Fit1DResult res;
  res.omega = detail::unit_direction(n, best_theta, best_phi);
  std::vector<double> means;
  double tmin = 0.0;
  plane_variance(res.omega, &means, &tmin);
  // orient omega so the fitted profile is nondecreasing (the objective is
  // invariant under omega -> -omega)
  if (means.back() < means.front()) {
    for (int d = 0; d < 3; ++d) res.omega[d] = -res.omega[d];
    plane_variance(res.omega, &means, &tmin);
  }
  res.profile = GridFunction::line(static_cast<int>(means.size()), tmin, h,
                                   TailModel::Constant(means.back()));
  res.profile.values() = means;
  double sup = 0.0;
  u.for_each_index([&](int i, int j, int k) {
    const auto p = u.point(i, j, k);
    double t = 0.0;
    for (int d = 0; d < n; ++d) t += res.omega[d] * p[d];
    sup = std::max(sup,
                   std::abs(u.at(i, j, k) - res.profile.eval({t, 0.0, 0.0})));
  });
  res.residual = sup;
  return res;
}

}  // namespace fraclab
