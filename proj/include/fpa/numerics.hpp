#pragma once

// Scalar numerical kernels: adaptive quadrature, bounded minimization,
// bracketed root finding. Everything here is pure and reentrant; repeated
// calls with identical inputs return bit-identical results.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "fpa/errors.hpp"

namespace fpa {

struct ToleranceConfig {
  double abs_tol = 1e-8;
  double rel_tol = 1e-9;
  int max_iter = 200;  // refinement depth for quadrature, iteration cap otherwise

  static constexpr ToleranceConfig quadrature() { return {1e-8, 1e-9, 200}; }
  static constexpr ToleranceConfig minimization() { return {1e-9, 1e-9, 200}; }

  void validate() const {
    if (!(abs_tol > 0.0)) throw std::invalid_argument("ToleranceConfig: abs_tol must be > 0");
    if (!(rel_tol >= 0.0)) throw std::invalid_argument("ToleranceConfig: rel_tol must be >= 0");
    if (max_iter < 1) throw std::invalid_argument("ToleranceConfig: max_iter must be >= 1");
  }
};

namespace detail {

struct QuadState {
  bool failed = false;
  double err_accum = 0.0;
};

// Closed rule: adaptive Simpson with Richardson extrapolation. Evaluates
// panel endpoints, so the integrand must be finite there.
template <class F>
double simpson_rec(F& f, double a, double b, double fa, double fm, double fb, double whole,
                   double eps, int depth, int max_depth, QuadState& st) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double h = b - a;
  const double left = (h / 12.0) * (fa + 4.0 * flm + fm);
  const double right = (h / 12.0) * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * eps || m <= a || m >= b) {
    return left + right + delta / 15.0;
  }
  if (depth >= max_depth) {
    st.failed = true;
    st.err_accum += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth + 1, max_depth, st) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth + 1, max_depth, st);
}

// Open rule: adaptive midpoint with 3-way splits (the center node is reused,
// panel endpoints are never evaluated). Richardson with ratio 3 gives an
// O(h^4) accepted value and |M3-M|/8 as the error estimate.
template <class F>
double midpoint_rec(F& f, double a, double b, double fm, double eps, int depth, int max_depth,
                    QuadState& st) {
  const double h = b - a;
  const double whole = h * fm;
  const double m1 = a + h / 6.0;
  const double m3 = b - h / 6.0;
  const double f1 = f(m1);
  const double f3 = f(m3);
  const double thirds = (h / 3.0) * (f1 + fm + f3);
  const double delta = (thirds - whole) / 8.0;
  if (std::abs(delta) <= eps || m1 <= a || m3 >= b) {
    return thirds + delta;
  }
  if (depth >= max_depth) {
    st.failed = true;
    st.err_accum += std::abs(delta);
    return thirds + delta;
  }
  const double c1 = a + h / 3.0;
  const double c2 = b - h / 3.0;
  // halving (not thirding) the child tolerance keeps endpoint singularities
  // convergent: their per-panel error shrinks only linearly with width
  const double e2 = 0.5 * eps;
  return midpoint_rec(f, a, c1, f1, e2, depth + 1, max_depth, st) +
         midpoint_rec(f, c1, c2, fm, e2, depth + 1, max_depth, st) +
         midpoint_rec(f, c2, b, f3, e2, depth + 1, max_depth, st);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [lo, hi].
/// Returns I with |I - integral| <= abs_tol + rel_tol*|I| for smooth f.
/// Throws convergence_error (carrying the best estimate and error bound) if
/// the refinement depth cap is hit before the tolerance is met.
template <class F>
double integrate(F&& f, double lo, double hi, ToleranceConfig tol = ToleranceConfig::quadrature()) {
  tol.validate();
  if (!(lo <= hi)) throw std::domain_error("integrate: requires lo <= hi");
  if (lo == hi) return 0.0;
  const double fa = f(lo);
  const double fb = f(hi);
  const double m = 0.5 * (lo + hi);
  const double fm = f(m);
  const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  const double eps = tol.abs_tol + tol.rel_tol * std::abs(whole);
  const int max_depth = std::min(tol.max_iter, 52);
  detail::QuadState st;
  const double result = detail::simpson_rec(f, lo, hi, fa, fm, fb, whole, eps, 0, max_depth, st);
  if (st.failed) {
    throw convergence_error("integrate: refinement depth exhausted", result, st.err_accum);
  }
  return result;
}

/// Open-endpoint adaptive quadrature (3-way midpoint splits); f is never
/// evaluated at lo or hi, so integrable endpoint singularities are fine.
template <class F>
double integrate_open(F&& f, double lo, double hi,
                      ToleranceConfig tol = ToleranceConfig::quadrature()) {
  tol.validate();
  if (!(lo <= hi)) throw std::domain_error("integrate_open: requires lo <= hi");
  if (lo == hi) return 0.0;
  const double fm = f(0.5 * (lo + hi));
  const double rough = (hi - lo) * fm;
  const double eps = tol.abs_tol + tol.rel_tol * std::abs(rough);
  const int max_depth = std::min(tol.max_iter, 48);
  detail::QuadState st;
  const double result = detail::midpoint_rec(f, lo, hi, fm, eps, 0, max_depth, st);
  if (st.failed) {
    throw convergence_error("integrate_open: refinement depth exhausted", result, st.err_accum);
  }
  return result;
}

struct MinimizeResult {
  double argmin = 0.0;
  double min = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
};

/// Bounded scalar minimization: golden-section search followed by parabolic
/// refinement. Both endpoints are always evaluated and may be returned, so on
/// a unimodal f the result is the global minimizer of the closed interval.
template <class F>
MinimizeResult minimize_scalar(F&& f, double lo, double hi,
                               ToleranceConfig tol = ToleranceConfig::minimization()) {
  tol.validate();
  if (!(lo < hi)) throw std::domain_error("minimize_scalar: requires lo < hi");

  constexpr double inv_phi = 0.6180339887498949;  // 1/golden ratio
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  MinimizeResult res;
  int it = 0;
  const auto width_tol = [&](double x) { return tol.abs_tol + tol.rel_tol * std::abs(x); };
  while ((b - a) > width_tol(0.5 * (a + b)) && it < tol.max_iter) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
    ++it;
  }
  res.converged = (b - a) <= width_tol(0.5 * (a + b));
  res.iterations = it;
  double xb = (f1 <= f2) ? x1 : x2;
  double fb = std::min(f1, f2);

  // Parabolic refinement through (a, xb, b); a couple of fits polish the
  // last digits once golden has localized the minimizer.
  double pa = a, pb = b;
  double fpa = f(pa), fpb = f(pb);
  for (int k = 0; k < 3; ++k) {
    const double d1 = (xb - pa) * (fb - fpb);
    const double d2 = (xb - pb) * (fb - fpa);
    const double denom = 2.0 * (d2 - d1);
    if (denom == 0.0) break;
    const double step = ((xb - pa) * d1 - (xb - pb) * d2) / denom;
    const double cand = xb - step;
    if (!(cand > pa && cand < pb) || cand == xb) break;
    const double fc = f(cand);
    if (fc < fb) {
      (cand < xb ? pb : pa) = xb;
      (cand < xb ? fpb : fpa) = fb;
      xb = cand;
      fb = fc;
    } else {
      (cand < xb ? pa : pb) = cand;
      (cand < xb ? fpa : fpb) = fc;
    }
  }

  // Endpoints can win (the minimum may be attained at lo or hi).
  const double flo = f(lo);
  const double fhi = f(hi);
  res.argmin = xb;
  res.min = fb;
  if (flo <= res.min) {
    res.argmin = lo;
    res.min = flo;
  }
  if (fhi < res.min) {
    res.argmin = hi;
    res.min = fhi;
  }
  return res;
}

/// Brent root finding on a sign-changing bracket [lo, hi].
/// Returns x with |f(x)| <= abs_tol or bracket width <= abs_tol + rel_tol|x|.
/// Throws std::domain_error if f(lo) and f(hi) have the same (nonzero) sign.
template <class F>
double find_root(F&& f, double lo, double hi, ToleranceConfig tol = {1e-9, 1e-9, 200}) {
  tol.validate();
  double a = lo, b = hi;
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) throw std::domain_error("find_root: f(lo) and f(hi) must bracket a root");

  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int it = 0; it < tol.max_iter; ++it) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 0.5 * (tol.abs_tol + tol.rel_tol * std::abs(b));
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || std::abs(fb) <= tol.abs_tol) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      // secant / inverse quadratic interpolation
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      e = d = b - a;
    }
  }
  return b;
}

}  // namespace fpa
