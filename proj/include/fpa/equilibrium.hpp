#pragma once

// Bayes-Nash equilibrium computation and certification for single-item
// first-price auctions: closed-form symmetric solver, backward-shooting ODE
// solver for two asymmetric bidders, and a best-response residual verifier
// that certifies approximate-equilibrium quality without trusting either
// solver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include "fpa/auction.hpp"
#include "fpa/distribution.hpp"
#include "fpa/errors.hpp"
#include "fpa/numerics.hpp"

namespace fpa {

struct SolverMeta {
  int iterations = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double b_bar = 0.0;  // common maximum bid
  int knots = 0;
  int value_grid = 0;
  int bid_grid = 0;
};

struct EquilibriumSolution {
  StrategyProfile strategies;
  double residual = 0.0;
  SolverMeta meta;
};

/// Max over bidders, values and deviation bids of the utility gained by
/// deviating, floored at 0. Utilities are exact (bid-CDF products, tie rule
/// lowest-index-wins); grids are quantile-spaced in value and uniform in bid.
/// threads = 0 uses hardware concurrency; the max-merge is order-independent.
inline double best_response_residual(const AuctionInstance& instance,
                                     const StrategyProfile& strategies, int value_grid_size,
                                     int bid_grid_size, int threads = 0) {
  check_profile(instance, strategies);
  if (value_grid_size < 2 || bid_grid_size < 2) {
    throw std::invalid_argument("best_response_residual: grids need >= 2 points");
  }
  const int n = instance.size();
  double bid_lo = strategies[0].min_bid();
  double bid_hi = strategies[0].max_bid();
  for (const auto& s : strategies) {
    bid_lo = std::min(bid_lo, s.min_bid());
    bid_hi = std::max(bid_hi, s.max_bid());
  }

  // win probability of bidder i at bid b under the tie rule
  const auto win_prob_at = [&](int i, double b) {
    double p = 1.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto& sj = strategies[static_cast<std::size_t>(j)];
      p *= (j > i) ? bid_cdf(instance.bidder(j), sj, b) : bid_cdf_left(instance.bidder(j), sj, b);
    }
    return p;
  };

  std::vector<double> bid_grid(static_cast<std::size_t>(bid_grid_size));
  for (int k = 0; k < bid_grid_size; ++k) {
    bid_grid[static_cast<std::size_t>(k)] =
        bid_lo + (bid_hi - bid_lo) * k / (bid_grid_size - 1);
  }

  const auto residual_for_value = [&](int i, double v) {
    const double eq_bid = strategies[static_cast<std::size_t>(i)].bid(v);
    const double eq_util = (v - eq_bid) * win_prob_at(i, eq_bid);
    double best = 0.0;
    for (const double b : bid_grid) {
      const double u = (v - b) * win_prob_at(i, b);
      best = std::max(best, u - eq_util);
    }
    return best;
  };

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const int nthreads = std::clamp(threads > 0 ? threads : static_cast<int>(hw), 1, 64);

  std::vector<double> partial(static_cast<std::size_t>(nthreads), 0.0);
  const auto worker = [&](int t) {
    double local = 0.0;
    for (int k = t; k < value_grid_size; k += nthreads) {
      const double q = static_cast<double>(k) / (value_grid_size - 1);
      for (int i = 0; i < n; ++i) {
        const double v = instance.bidder(i).quantile(q);
        local = std::max(local, residual_for_value(i, v));
      }
    }
    partial[static_cast<std::size_t>(t)] = local;
  };
  if (nthreads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  double res = 0.0;
  for (const double p : partial) res = std::max(res, p);
  return res;
}

namespace detail {

inline void require_positive_density(const DistributionSpec& d, const char* who) {
  for (int k = 1; k < 64; ++k) {
    const double q = static_cast<double>(k) / 64.0;
    if (!(d.pdf(d.quantile(q)) > 0.0)) {
      throw unsupported_instance_error(std::string(who) +
                                       ": distribution must have positive density on its support");
    }
  }
}

}  // namespace detail

struct SymmetricOptions {
  int knots = 1024;
  int value_grid = 201;  // residual certification grids
  int bid_grid = 401;
  int threads = 0;
};

/// Symmetric equilibrium of n iid bidders:
///   b(v) = v - int_lo^v F(t)^(n-1) dt / F(v)^(n-1),
/// sampled onto a quantile-spaced strategy grid and self-certified with the
/// residual verifier.
inline EquilibriumSolution solve_symmetric(const DistributionSpec& dist, int n,
                                           SymmetricOptions opts = {}) {
  if (n < 2) throw std::invalid_argument("solve_symmetric: needs n >= 2");
  detail::require_positive_density(dist, "solve_symmetric");
  const int K = opts.knots;
  const double lo = dist.lo();
  const ToleranceConfig seg_tol{1e-13, 1e-13, 200};

  std::vector<StrategyKnot> knots;
  knots.reserve(static_cast<std::size_t>(K));
  knots.push_back({lo, lo});
  double cum = 0.0;
  double prev_v = lo;
  const auto integrand = [&](double t) { return std::pow(dist.cdf(t), n - 1); };
  for (int k = 1; k < K; ++k) {
    const double q = static_cast<double>(k) / (K - 1);
    const double v = dist.quantile(q);
    cum += integrate(integrand, prev_v, v, seg_tol);
    prev_v = v;
    double b = v - cum / std::pow(dist.cdf(v), n - 1);
    b = std::min(b, v);
    b = std::max(b, knots.back().bid);
    knots.push_back({v, b});
  }

  EquilibriumSolution sol;
  sol.strategies.assign(static_cast<std::size_t>(n), BidStrategy(knots));
  sol.meta.knots = K;
  sol.meta.b_bar = knots.back().bid;
  sol.meta.value_grid = opts.value_grid;
  sol.meta.bid_grid = opts.bid_grid;
  const AuctionInstance instance(std::vector<DistributionSpec>(static_cast<std::size_t>(n), dist));
  sol.residual = best_response_residual(instance, sol.strategies, opts.value_grid, opts.bid_grid,
                                        opts.threads);
  return sol;
}

struct AsymmetricOptions {
  int steps = 8192;        // base RK4 steps per shot
  int max_bisect = 80;     // bisection iterations on the common max bid
  double bottom_eps = 1e-6;  // stop integrating at b = lo + bottom_eps*(range)
  int knots = 1024;
  int value_grid = 201;
  int bid_grid = 401;
  int threads = 0;
};

namespace detail {

struct ShotResult {
  bool reached_bottom = false;
  double b_stop = 0.0;
  double v1 = 0.0, v2 = 0.0;                 // inverse-bid values at the stop point
  std::vector<double> bs, phi1s, phi2s;      // trajectory, b decreasing
};

// Backward integration of the inverse-bid ODE system
//   dphi_i/db = (F_i(phi_i)/f_i(phi_i)) / (phi_j - b)
// from the candidate common max bid down to lo + eps. Stops early if a curve
// touches the diagonal phi = b (candidate too high).
inline ShotResult shoot(const DistributionSpec& d1, const DistributionSpec& d2, double b_bar,
                        double lo, double eps, int base_steps, bool record) {
  ShotResult r;
  double b = b_bar;
  double p1 = d1.hi();
  double p2 = d2.hi();
  const double b_end = lo + eps;
  const double h_base = (b_bar - b_end) / base_steps;
  const auto slope = [&](const DistributionSpec& d, double phi, double opp, double bb) {
    return (d.cdf(phi) / d.pdf(phi)) / (opp - bb);
  };
  const auto valid = [&](double q1, double q2, double bb) {
    return q1 > bb && q2 > bb && q1 > lo && q2 > lo;
  };
  if (record) {
    r.bs.push_back(b);
    r.phi1s.push_back(p1);
    r.phi2s.push_back(p2);
  }
  while (b > b_end) {
    double h = std::min(h_base, b - b_end);
    // keep steps small relative to the distance from the diagonal
    const double gap = std::min(p1 - b, p2 - b);
    h = std::min(h, 0.25 * gap);
    bool stepped = false;
    for (int halvings = 0; halvings < 48 && !stepped; ++halvings, h *= 0.5) {
      const double k11 = slope(d1, p1, p2, b);
      const double k12 = slope(d2, p2, p1, b);
      const double a1 = p1 - 0.5 * h * k11, a2 = p2 - 0.5 * h * k12, bm = b - 0.5 * h;
      if (!valid(a1, a2, bm)) continue;
      const double k21 = slope(d1, a1, a2, bm);
      const double k22 = slope(d2, a2, a1, bm);
      const double c1 = p1 - 0.5 * h * k21, c2 = p2 - 0.5 * h * k22;
      if (!valid(c1, c2, bm)) continue;
      const double k31 = slope(d1, c1, c2, bm);
      const double k32 = slope(d2, c2, c1, bm);
      const double e1 = p1 - h * k31, e2 = p2 - h * k32, be = b - h;
      if (!valid(e1, e2, be)) continue;
      const double k41 = slope(d1, e1, e2, be);
      const double k42 = slope(d2, e2, e1, be);
      const double n1 = p1 - (h / 6.0) * (k11 + 2.0 * k21 + 2.0 * k31 + k41);
      const double n2 = p2 - (h / 6.0) * (k12 + 2.0 * k22 + 2.0 * k32 + k42);
      if (!valid(n1, n2, be) || !std::isfinite(n1) || !std::isfinite(n2)) continue;
      p1 = n1;
      p2 = n2;
      b = be;
      stepped = true;
    }
    if (!stepped) break;  // pinned against the diagonal: candidate too high
    if (record) {
      r.bs.push_back(b);
      r.phi1s.push_back(p1);
      r.phi2s.push_back(p2);
    }
  }
  r.b_stop = b;
  r.v1 = p1;
  r.v2 = p2;
  r.reached_bottom = (b <= b_end * (1.0 + 1e-12) + 1e-300);
  return r;
}

// Signed shooting mismatch: positive = candidate max bid too low (curves
// still above the support bottom when b runs out), negative = too high
// (diagonal hit while b is still above the bottom).
inline double shot_mismatch(const ShotResult& r, const DistributionSpec& d1,
                            const DistributionSpec& d2, double lo, double eps) {
  if (r.reached_bottom) {
    return std::max(d1.cdf(r.v1), d2.cdf(r.v2));
  }
  return -(r.b_stop - lo) / std::max(eps, 1e-300);
}

}  // namespace detail

/// Two-bidder asymmetric equilibrium via backward shooting on the inverse
/// bid functions. Requires atomless distributions with positive density and
/// identical support lower bounds (no normalization is applied). Certified
/// by the residual verifier; throws convergence_error if the shooting
/// bracket degenerates without meeting the boundary conditions.
inline EquilibriumSolution solve_asymmetric_two(const DistributionSpec& d1,
                                                const DistributionSpec& d2,
                                                AsymmetricOptions opts = {}) {
  detail::require_positive_density(d1, "solve_asymmetric_two");
  detail::require_positive_density(d2, "solve_asymmetric_two");
  if (std::abs(d1.lo() - d2.lo()) > 1e-12) {
    throw unsupported_instance_error(
        "solve_asymmetric_two: supports must share a common lower bound");
  }
  const double lo = d1.lo();
  const double hi_min = std::min(d1.hi(), d2.hi());
  const double range = hi_min - lo;
  const double eps = opts.bottom_eps * range;

  double lo_bar = lo + 1e-4 * range;
  double hi_bar = hi_min - 1e-9 * range;
  const auto mismatch = [&](double b_bar) {
    const auto r = detail::shoot(d1, d2, b_bar, lo, eps, opts.steps, false);
    return detail::shot_mismatch(r, d1, d2, lo, eps);
  };
  double m_lo = mismatch(lo_bar);
  double m_hi = mismatch(hi_bar);
  int iters = 0;
  if (m_lo <= 0.0 || m_hi >= 0.0) {
    throw convergence_error(
        "solve_asymmetric_two: shooting bracket does not straddle the boundary conditions "
        "(mismatch " + std::to_string(m_lo) + " / " + std::to_string(m_hi) + ")",
        0.5 * (lo_bar + hi_bar), hi_bar - lo_bar);
  }
  for (; iters < opts.max_bisect && (hi_bar - lo_bar) > 1e-15 * range; ++iters) {
    const double mid = 0.5 * (lo_bar + hi_bar);
    if (mismatch(mid) > 0.0) {
      lo_bar = mid;
    } else {
      hi_bar = mid;
    }
  }
  // The low end of the final bracket is guaranteed to integrate all the way
  // down; use it for the reported trajectory.
  const double b_bar = lo_bar;
  const auto shot = detail::shoot(d1, d2, b_bar, lo, eps, opts.steps, true);

  const auto build = [&](const DistributionSpec& d, const std::vector<double>& phis) {
    // trajectory is b decreasing; reverse into value-ascending knots and
    // extend linearly down to (lo, lo) across the stopped epsilon gap
    std::vector<StrategyKnot> raw;
    raw.reserve(phis.size() + 1);
    raw.push_back({lo, lo});
    for (std::size_t k = phis.size(); k-- > 0;) {
      const double v = phis[k];
      const double b = shot.bs[k];
      if (v > raw.back().value + 1e-14) {
        raw.push_back({v, std::max(raw.back().bid, std::min(b, v))});
      }
    }
    if (raw.back().value < d.hi()) raw.push_back({d.hi(), raw.back().bid});
    const BidStrategy dense{raw};
    std::vector<StrategyKnot> knots;
    knots.reserve(static_cast<std::size_t>(opts.knots));
    for (int k = 0; k < opts.knots; ++k) {
      const double q = static_cast<double>(k) / (opts.knots - 1);
      const double v = d.quantile(q);
      double b = std::min(dense.bid(v), v);
      if (!knots.empty()) {
        if (!(v > knots.back().value)) continue;
        b = std::max(b, knots.back().bid);
      }
      knots.push_back({v, b});
    }
    return BidStrategy(knots);
  };

  EquilibriumSolution sol;
  sol.strategies.push_back(build(d1, shot.phi1s));
  sol.strategies.push_back(build(d2, shot.phi2s));
  sol.meta.iterations = iters;
  sol.meta.bracket_lo = lo_bar;
  sol.meta.bracket_hi = hi_bar;
  sol.meta.b_bar = b_bar;
  sol.meta.knots = opts.knots;
  sol.meta.value_grid = opts.value_grid;
  sol.meta.bid_grid = opts.bid_grid;
  const AuctionInstance instance({d1, d2});
  sol.residual = best_response_residual(instance, sol.strategies, opts.value_grid, opts.bid_grid,
                                        opts.threads);
  return sol;
}

}  // namespace fpa
