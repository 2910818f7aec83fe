#pragma once

// Closed-form welfare bounds and the nested numerical pipeline that certifies
// the headline constant: the per-quantile worst case ell(q), the misallocated-
// winner value floor vbar, the two misallocation lower bounds, and
// Phi = min_x (int_x^1 ell) / (1-x).

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "fpa/numerics.hpp"

namespace fpa {

/// Per-quantile penalty objective
///   1 - r (1-q) ln(1 + (1-r) / ((1-q) r)),
/// extended by continuity to 1 at r = 0 and at q = 1. At q = 0 it reduces to
/// 1 + r ln r, the objective behind the e-1/e baseline.
inline double inner_objective(double r, double q) {
  if (!(r >= 0.0 && r <= 1.0)) throw std::domain_error("inner_objective: r must be in [0,1]");
  if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("inner_objective: q must be in [0,1]");
  if (r <= 0.0 || r >= 1.0 || q >= 1.0) return 1.0;
  return 1.0 - r * (1.0 - q) * std::log1p((1.0 - r) / ((1.0 - q) * r));
}

struct EllResult {
  double value = 1.0;
  double argmin_r = 1.0;
};

/// ell(q) = min_{r in [0,1]} inner_objective(r, q). Golden-section output is
/// cross-checked against a 1000-point grid (unimodality in r is unproven);
/// the better of the two wins. ell(1) = 1 by continuity.
inline EllResult ell(double q, ToleranceConfig tol = ToleranceConfig::minimization()) {
  if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("ell: q must be in [0,1]");
  if (q >= 1.0) return {1.0, 1.0};
  const auto f = [q](double r) { return inner_objective(r, q); };
  MinimizeResult best = minimize_scalar(f, 0.0, 1.0, tol);
  // coarse grid guard against a missed basin
  constexpr int grid = 1000;
  double grid_best = 1.0;
  double grid_arg = 1.0;
  for (int k = 1; k < grid; ++k) {
    const double r = static_cast<double>(k) / grid;
    const double fr = f(r);
    if (fr < grid_best) {
      grid_best = fr;
      grid_arg = r;
    }
  }
  if (grid_best < best.min) {
    const double lo = std::max(0.0, grid_arg - 2.0 / grid);
    const double hi = std::min(1.0, grid_arg + 2.0 / grid);
    const MinimizeResult refined = minimize_scalar(f, lo, hi, tol);
    if (refined.min < best.min) best = refined;
  }
  return {best.min, best.argmin};
}

struct EllTableRow {
  double q;
  double ell;
  double argmin_r;
};

struct BoundReport {
  std::vector<EllTableRow> ell_table;
  double phi = 0.0;
  double outer_argmin_x = 0.0;
  ToleranceConfig quad_tol;
  ToleranceConfig min_tol;
  int grid_size = 0;
};

/// The certified constant Phi = min_{x in [0, 1-1e-6]} int_x^1 ell(t) dt / (1-x),
/// computed with adaptive open quadrature over a memoized ell and bounded
/// scalar minimization for the outer min. Report carries the ell table and
/// the outer argmin. Propagates convergence_error from the quadrature.
inline BoundReport phi_constant(ToleranceConfig quad_tol = ToleranceConfig::quadrature(),
                                ToleranceConfig min_tol = ToleranceConfig::minimization(),
                                int table_grid = 1001) {
  quad_tol.validate();
  min_tol.validate();
  if (table_grid < 2) throw std::invalid_argument("phi_constant: table_grid must be >= 2");

  std::map<double, double> cache;  // confined to this call; single-threaded
  const auto ell_memo = [&](double q) {
    const auto it = cache.find(q);
    if (it != cache.end()) return it->second;
    const double v = ell(q, min_tol).value;
    cache.emplace(q, v);
    return v;
  };
  const auto tail_average = [&](double x) {
    return integrate_open(ell_memo, x, 1.0, quad_tol) / (1.0 - x);
  };

  constexpr double x_cap = 1.0 - 1e-6;  // x = 1 excluded (0/0)
  const MinimizeResult outer = minimize_scalar(tail_average, 0.0, x_cap, min_tol);

  BoundReport report;
  report.phi = outer.min;
  report.outer_argmin_x = outer.argmin;
  report.quad_tol = quad_tol;
  report.min_tol = min_tol;
  report.grid_size = table_grid;
  report.ell_table.reserve(static_cast<std::size_t>(table_grid));
  for (int k = 0; k < table_grid; ++k) {
    const double q = static_cast<double>(k) / (table_grid - 1);
    const EllResult e = ell(q, min_tol);
    report.ell_table.push_back({q, e.value, e.argmin_r});
  }
  return report;
}

/// Value floor for an agent outbidding agent i (value v_i, quantile q_i,
/// bid b_i) with a bid of b_j >= b_i:
///   vbar = v_i * [ b_j/v_i - (1-q_i)(b_j/v_i)(b_i/v_i) - q_i b_i/v_i ]
///              / [ 1 - q_i - b_i/v_i + q_i b_j/v_i ].
/// At q_i = 0 this is exactly b_j; at q_i = 1 it is v_i.
/// Throws std::domain_error on a nonpositive denominator (callers fall back
/// to the trivial bound vbar = b_j).
inline double vbar(double v_i, double q_i, double b_i, double b_j) {
  if (!(v_i > 0.0)) throw std::domain_error("vbar: v_i must be > 0");
  if (!(q_i >= 0.0 && q_i <= 1.0)) throw std::domain_error("vbar: q_i must be in [0,1]");
  if (!(b_i >= 0.0 && b_i < v_i)) throw std::domain_error("vbar: requires 0 <= b_i < v_i");
  if (!(b_j >= b_i)) throw std::domain_error("vbar: requires b_j >= b_i");
  const double si = b_i / v_i;
  const double sj = b_j / v_i;
  const double den = 1.0 - q_i - si + q_i * sj;
  if (!(den > 0.0)) throw std::domain_error("vbar: nonpositive denominator");
  const double num = sj - (1.0 - q_i) * sj * si - q_i * si;
  return v_i * num / den;
}

/// Threshold-bid floor at quantile z: tau_i(z, v_i) >= v_i - u_cond / z.
/// May be negative; callers clamp at 0 when using it as a bid.
inline double tau_lower_bound(double v_i, double u_cond, double z) {
  if (!(z > 0.0)) throw std::domain_error("tau_lower_bound: z must be > 0");
  if (!(u_cond >= 0.0)) throw std::domain_error("tau_lower_bound: u_cond must be >= 0");
  return v_i - u_cond / z;
}

/// Misallocated-winner value bound behind the e-1/e baseline:
///   v_i (1 - x_cond) + u_cond ln(u_cond / v_i),
/// with the u_cond = 0 limit v_i (1 - x_cond).
inline double misalloc_lb_old(double v_i, double x_cond, double u_cond) {
  if (!(v_i > 0.0)) throw std::domain_error("misalloc_lb_old: v_i must be > 0");
  if (!(x_cond >= 0.0 && x_cond <= 1.0)) {
    throw std::domain_error("misalloc_lb_old: x_cond must be in [0,1]");
  }
  if (!(u_cond >= 0.0 && u_cond <= v_i * x_cond + 1e-12 * v_i)) {
    throw std::domain_error("misalloc_lb_old: infeasible (requires 0 <= u_cond <= v_i*x_cond)");
  }
  if (u_cond <= 0.0) return v_i * (1.0 - x_cond);
  return v_i * (1.0 - x_cond) + u_cond * std::log(u_cond / v_i);
}

/// Sharper misallocated-winner value bound:
///   v_i (1 - u/(v_i - b_i)) - (1-q_i) u ln(1 + (v_i - b_i - u) / ((1-q_i) u)),
/// the closed form of int_{u/(v-b)}^1 vbar(v_i, q_i, b_i, v_i - u/z) dz.
/// Limits: u -> 0 gives v_i; q_i -> 1 gives v_i (1 - u/(v_i - b_i)).
inline double misalloc_lb_new(double v_i, double q_i, double b_i, double u_cond) {
  if (!(v_i > 0.0)) throw std::domain_error("misalloc_lb_new: v_i must be > 0");
  if (!(q_i >= 0.0 && q_i <= 1.0)) throw std::domain_error("misalloc_lb_new: q_i must be in [0,1]");
  if (!(b_i >= 0.0 && b_i < v_i)) throw std::domain_error("misalloc_lb_new: requires 0 <= b_i < v_i");
  const double cap = v_i - b_i;
  if (!(u_cond >= 0.0 && u_cond <= cap + 1e-12 * v_i)) {
    throw std::domain_error("misalloc_lb_new: infeasible (requires 0 <= u_cond <= v_i - b_i)");
  }
  if (u_cond <= 0.0) return v_i;
  const double u = std::min(u_cond, cap);
  const double base = v_i * (1.0 - u / cap);
  if (q_i >= 1.0) return base;
  return base - (1.0 - q_i) * u * std::log1p((cap - u) / ((1.0 - q_i) * u));
}

/// The e-1/e baseline: min_{r in [0,1]} (1 + r ln r) = 1 - 1/e, computed
/// numerically. Equals ell(0).
inline double old_constant(ToleranceConfig tol = ToleranceConfig::minimization()) {
  const auto f = [](double r) { return r <= 0.0 ? 1.0 : 1.0 + r * std::log(r); };
  return minimize_scalar(f, 0.0, 1.0, tol).min;
}

}  // namespace fpa
