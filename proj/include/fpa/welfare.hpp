#pragma once

// Welfare benchmark and equilibrium welfare (quadrature and seeded Monte
// Carlo), the welfare decomposition identity, the gamma quantile identity,
// and the lemma auditor that checks every inequality of the bounds module on
// concrete (approximate) equilibria.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <thread>
#include <vector>

#include "fpa/auction.hpp"
#include "fpa/bounds.hpp"
#include "fpa/equilibrium.hpp"
#include "fpa/numerics.hpp"
#include "fpa/rng.hpp"

namespace fpa {

enum class WelfareMethod { quadrature, monte_carlo };

struct WelfareEstimate {
  double welf = 0.0;
  double opt = 0.0;
  double ratio = 0.0;
  WelfareMethod method = WelfareMethod::quadrature;
  double ci_halfwidth = 0.0;  // one standard error of the ratio; 0 for quadrature
  std::int64_t samples = 0;
};

namespace detail {

// Fixed shard count keeps Monte Carlo results independent of the worker
// count; partials are merged in shard order.
constexpr int kShards = 64;

template <class ShardFn>
void run_shards(int shards, int threads, ShardFn&& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const int nthreads = std::clamp(threads > 0 ? threads : static_cast<int>(hw), 1, 64);
  if (nthreads == 1) {
    for (int s = 0; s < shards; ++s) fn(s);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      for (int s = t; s < shards; s += nthreads) fn(s);
    });
  }
  for (auto& th : pool) th.join();
}

inline std::vector<double> welfare_breakpoints(const AuctionInstance& instance) {
  std::set<double> pts{0.0, instance.max_upper()};
  for (const auto& d : instance.bidders()) {
    pts.insert(d.lo());
    pts.insert(d.hi());
    for (const auto& k : d.knots()) pts.insert(k.first);
  }
  return {pts.begin(), pts.end()};
}

}  // namespace detail

/// E[max_i v_i] by quadrature of 1 - prod_i F_i(t) over the support hull,
/// split at distribution breakpoints so each panel is smooth.
inline double optimal_welfare(const AuctionInstance& instance,
                              ToleranceConfig tol = {1e-10, 1e-12, 200}) {
  const auto pts = detail::welfare_breakpoints(instance);
  const auto integrand = [&](double t) {
    double p = 1.0;
    for (const auto& d : instance.bidders()) p *= d.cdf(t);
    return 1.0 - p;
  };
  double total = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    total += integrate(integrand, pts[k - 1], pts[k], tol);
  }
  return total;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
};

/// Seeded Monte Carlo estimate of E[max_i v_i].
inline MonteCarloEstimate optimal_welfare_mc(const AuctionInstance& instance, std::uint64_t seed,
                                             std::int64_t samples, int threads = 0) {
  const int S = detail::kShards;
  std::vector<double> sum(S, 0.0), sumsq(S, 0.0);
  std::vector<std::int64_t> cnt(S, 0);
  detail::run_shards(S, threads, [&](int s) {
    Rng rng(derive_stream_seed(seed, static_cast<std::uint64_t>(s)));
    const std::int64_t per = samples / S + (s < samples % S ? 1 : 0);
    double a = 0.0, b = 0.0;
    for (std::int64_t t = 0; t < per; ++t) {
      double m = 0.0;
      for (const auto& d : instance.bidders()) m = std::max(m, d.sample(rng));
      a += m;
      b += m * m;
    }
    sum[static_cast<std::size_t>(s)] = a;
    sumsq[static_cast<std::size_t>(s)] = b;
    cnt[static_cast<std::size_t>(s)] = per;
  });
  double a = 0.0, b = 0.0;
  std::int64_t nn = 0;
  for (int s = 0; s < S; ++s) {
    a += sum[static_cast<std::size_t>(s)];
    b += sumsq[static_cast<std::size_t>(s)];
    nn += cnt[static_cast<std::size_t>(s)];
  }
  MonteCarloEstimate est;
  est.samples = nn;
  est.mean = a / static_cast<double>(nn);
  const double var = std::max(0.0, b / static_cast<double>(nn) - est.mean * est.mean);
  est.std_error = std::sqrt(var / static_cast<double>(nn));
  return est;
}

/// Expected equilibrium welfare E[v_{i*}]. Quadrature integrates each
/// bidder's winning contribution over its own quantile space with exact
/// bid-CDF win probabilities; Monte Carlo plays seeded auctions.
inline WelfareEstimate equilibrium_welfare(const AuctionInstance& instance,
                                           const StrategyProfile& strategies, WelfareMethod method,
                                           std::uint64_t seed = 0, std::int64_t samples = 1000000,
                                           int threads = 0,
                                           ToleranceConfig tol = {1e-9, 1e-10, 200}) {
  check_profile(instance, strategies);
  const int n = instance.size();
  WelfareEstimate est;
  est.method = method;
  if (method == WelfareMethod::quadrature) {
    const auto win_prob_at = [&](int i, double b) {
      double p = 1.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const auto& sj = strategies[static_cast<std::size_t>(j)];
        p *= (j > i) ? bid_cdf(instance.bidder(j), sj, b)
                     : bid_cdf_left(instance.bidder(j), sj, b);
      }
      return p;
    };
    double welf = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto& d = instance.bidder(i);
      const auto& s = strategies[static_cast<std::size_t>(i)];
      const auto integrand = [&](double q) {
        const double v = d.quantile(q);
        return v * win_prob_at(i, s.bid(v));
      };
      welf += integrate_open(integrand, 0.0, 1.0, tol);
    }
    est.welf = welf;
    est.opt = optimal_welfare(instance);
    est.ratio = est.welf / est.opt;
    est.ci_halfwidth = 0.0;
    est.samples = 0;
    return est;
  }

  const int S = detail::kShards;
  std::vector<double> sw(S, 0.0), swsq(S, 0.0), so(S, 0.0), sosq(S, 0.0);
  std::vector<std::int64_t> cnt(S, 0);
  detail::run_shards(S, threads, [&](int s) {
    Rng rng(derive_stream_seed(seed, static_cast<std::uint64_t>(s)));
    const std::int64_t per = samples / S + (s < samples % S ? 1 : 0);
    std::vector<double> bids(static_cast<std::size_t>(n));
    double aw = 0.0, awsq = 0.0, ao = 0.0, aosq = 0.0;
    for (std::int64_t t = 0; t < per; ++t) {
      double vmax = 0.0;
      int winner = 0;
      double wval = 0.0;
      for (int j = 0; j < n; ++j) {
        const double v = instance.bidder(j).sample(rng);
        vmax = std::max(vmax, v);
        const double b = strategies[static_cast<std::size_t>(j)].bid(v);
        bids[static_cast<std::size_t>(j)] = b;
        if (j == 0 || b > bids[static_cast<std::size_t>(winner)]) {
          winner = j;
          wval = v;
        }
      }
      aw += wval;
      awsq += wval * wval;
      ao += vmax;
      aosq += vmax * vmax;
    }
    sw[static_cast<std::size_t>(s)] = aw;
    swsq[static_cast<std::size_t>(s)] = awsq;
    so[static_cast<std::size_t>(s)] = ao;
    sosq[static_cast<std::size_t>(s)] = aosq;
    cnt[static_cast<std::size_t>(s)] = per;
  });
  double aw = 0.0, awsq = 0.0, ao = 0.0, aosq = 0.0;
  std::int64_t nn = 0;
  for (int s = 0; s < S; ++s) {
    aw += sw[static_cast<std::size_t>(s)];
    awsq += swsq[static_cast<std::size_t>(s)];
    ao += so[static_cast<std::size_t>(s)];
    aosq += sosq[static_cast<std::size_t>(s)];
    nn += cnt[static_cast<std::size_t>(s)];
  }
  const double count = static_cast<double>(nn);
  est.welf = aw / count;
  est.opt = ao / count;
  est.ratio = est.welf / est.opt;
  const double se_w = std::sqrt(std::max(0.0, awsq / count - est.welf * est.welf) / count);
  const double se_o = std::sqrt(std::max(0.0, aosq / count - est.opt * est.opt) / count);
  est.ci_halfwidth = se_w / est.opt + est.ratio * se_o / est.opt;  // conservative 1-sigma
  est.samples = nn;
  return est;
}

struct DecompositionCheck {
  double lhs = 0.0;         // sample mean of v_{i*}
  double rhs = 0.0;         // same stream, realized win indicator of the
                            // highest-value agent replaced by its conditional
                            // win probability
  double discrepancy = 0.0;
  double std_error = 0.0;   // of the per-sample difference
  std::int64_t samples = 0;
};

/// Both sides of the welfare breakdown identity from the same sample stream.
/// The per-sample difference v_m (1{i*=m} - x_m(v_m|E_m(v_m))) has mean zero
/// at any strategy profile; its sample mean exercises the conditional
/// allocation machinery against realized win frequencies.
inline DecompositionCheck decomposition_check(const AuctionInstance& instance,
                                              const StrategyProfile& strategies,
                                              std::uint64_t seed, std::int64_t samples,
                                              int threads = 0) {
  check_profile(instance, strategies);
  const int n = instance.size();
  const int S = detail::kShards;
  std::vector<double> sl(S, 0.0), sd(S, 0.0), sdsq(S, 0.0);
  std::vector<std::int64_t> cnt(S, 0);
  detail::run_shards(S, threads, [&](int s) {
    Rng rng(derive_stream_seed(seed, static_cast<std::uint64_t>(s)));
    const std::int64_t per = samples / S + (s < samples % S ? 1 : 0);
    std::vector<double> values(static_cast<std::size_t>(n)), bids(static_cast<std::size_t>(n));
    double al = 0.0, ad = 0.0, adsq = 0.0;
    std::int64_t used = 0;
    for (std::int64_t t = 0; t < per; ++t) {
      int m = 0, winner = 0;
      for (int j = 0; j < n; ++j) {
        values[static_cast<std::size_t>(j)] = instance.bidder(j).sample(rng);
        bids[static_cast<std::size_t>(j)] =
            strategies[static_cast<std::size_t>(j)].bid(values[static_cast<std::size_t>(j)]);
        if (values[static_cast<std::size_t>(j)] > values[static_cast<std::size_t>(m)]) m = j;
        if (bids[static_cast<std::size_t>(j)] > bids[static_cast<std::size_t>(winner)]) winner = j;
      }
      const double vm = values[static_cast<std::size_t>(m)];
      double xm = 1.0;
      bool degenerate = false;
      for (int j = 0; j < n && !degenerate; ++j) {
        if (j == m) continue;
        const double fj = instance.bidder(j).cdf(vm);
        if (fj <= 0.0) {
          degenerate = true;
          break;
        }
        xm *= std::min(
            bid_cdf(instance.bidder(j), strategies[static_cast<std::size_t>(j)],
                    bids[static_cast<std::size_t>(m)]) / fj,
            1.0);
      }
      if (degenerate) continue;  // measure-zero conditioning event
      const double d = vm * ((winner == m ? 1.0 : 0.0) - xm);
      al += values[static_cast<std::size_t>(winner)];
      ad += d;
      adsq += d * d;
      ++used;
    }
    sl[static_cast<std::size_t>(s)] = al;
    sd[static_cast<std::size_t>(s)] = ad;
    sdsq[static_cast<std::size_t>(s)] = adsq;
    cnt[static_cast<std::size_t>(s)] = used;
  });
  double al = 0.0, ad = 0.0, adsq = 0.0;
  std::int64_t nn = 0;
  for (int s = 0; s < S; ++s) {
    al += sl[static_cast<std::size_t>(s)];
    ad += sd[static_cast<std::size_t>(s)];
    adsq += sdsq[static_cast<std::size_t>(s)];
    nn += cnt[static_cast<std::size_t>(s)];
  }
  DecompositionCheck chk;
  chk.samples = nn;
  const double count = static_cast<double>(nn);
  chk.lhs = al / count;
  const double dbar = ad / count;
  chk.rhs = chk.lhs - dbar;
  chk.discrepancy = std::abs(dbar);
  chk.std_error = std::sqrt(std::max(0.0, adsq / count - dbar * dbar) / count);
  return chk;
}

/// gamma_i(q) = P[E_i(v_i(q))] * v_i(q) = v_i(q) * prod_{j != i} F_j(v_i(q)).
inline double gamma(const AuctionInstance& instance, int i, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("gamma: q must be in [0,1]");
  const double v = instance.bidder(i).quantile(q);
  double p = 1.0;
  for (int j = 0; j < instance.size(); ++j) {
    if (j == i) continue;
    p *= instance.bidder(j).cdf(v);
  }
  return v * p;
}

/// sum_i int_0^1 gamma_i(q) dq; equals the optimal welfare for atomless
/// instances.
inline double optimal_welfare_via_gamma(const AuctionInstance& instance,
                                        ToleranceConfig tol = {1e-9, 1e-10, 200}) {
  double total = 0.0;
  for (int i = 0; i < instance.size(); ++i) {
    total += integrate_open([&](double q) { return gamma(instance, i, q); }, 0.0, 1.0, tol);
  }
  return total;
}

struct LemmaAudit {
  std::int64_t checks = 0;
  std::int64_t violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  // min(lhs - rhs)

  void record(double margin, double slack) {
    ++checks;
    worst_margin = std::min(worst_margin, margin);
    if (margin < -slack) ++violations;
  }
};

struct AuditReport {
  LemmaAudit no_overbid;         // (a) v_{i*} >= tau_i
  LemmaAudit vbar_floor;         // (b) v_{i*} >= vbar(v_m, q_m, b_m, b_{i*})
  LemmaAudit threshold_floor;    // (c) tau_i(z,v_i) >= v_i - u_cond/z
  LemmaAudit misalloc_old;       // (d) E[v_{i*} 1{i*!=i} | E_i] >= misalloc_lb_old
  LemmaAudit misalloc_new;       // (d) same vs misalloc_lb_new
  double tol = 0.0;
  double slack = 0.0;            // tol + 10 * residual (checks (b)-(d))
  std::uint64_t seed = 0;
  std::int64_t samples = 0;
  double residual = 0.0;
  std::int64_t total_violations() const {
    return no_overbid.violations + vbar_floor.violations + threshold_floor.violations +
           misalloc_old.violations + misalloc_new.violations;
  }
};

/// Checks the lemma-level inequalities on a solved or supplied profile:
/// (a) winner's value covers every threshold bid (no-overbidding chain) and
/// (b) the vbar floor, over seeded sample outcomes; (c) threshold-quantile
/// floors on a (value, z) grid where the lemma's precondition
/// tau_i(z,v_i) >= b_i(v_i) holds; (d) conditional misallocated-winner value
/// against both closed-form bounds, estimated by rejection-free truncated
/// sampling on a value grid. Solver residual enters checks (b)-(d) as slack
/// (10x, plus the user tolerance); (d) additionally allows 4 Monte Carlo
/// standard errors. Check (a) uses the bare tolerance: the no-overbidding
/// chain is a structural property of the strategies, so residual slack would
/// only mask a corrupted profile.
inline AuditReport audit_lemmas(const AuctionInstance& instance,
                                const EquilibriumSolution& solution, std::uint64_t seed,
                                std::int64_t samples, double tol, int value_grid = 9,
                                int z_grid = 19) {
  const StrategyProfile& strategies = solution.strategies;
  check_profile(instance, strategies);
  const int n = instance.size();
  AuditReport rep;
  rep.tol = tol;
  rep.residual = solution.residual;
  rep.slack = tol + 10.0 * solution.residual;
  rep.seed = seed;
  rep.samples = samples;

  // (a) + (b): seeded outcome stream
  {
    const std::int64_t stream_samples = samples;
    const int S = detail::kShards;
    std::vector<double> values(static_cast<std::size_t>(n)), bids(static_cast<std::size_t>(n));
    for (int s = 0; s < S; ++s) {
      Rng rng(derive_stream_seed(seed, static_cast<std::uint64_t>(s)));
      const std::int64_t per = stream_samples / S + (s < stream_samples % S ? 1 : 0);
      for (std::int64_t t = 0; t < per; ++t) {
        int m = 0, winner = 0;
        for (int j = 0; j < n; ++j) {
          values[static_cast<std::size_t>(j)] = instance.bidder(j).sample(rng);
          bids[static_cast<std::size_t>(j)] =
              strategies[static_cast<std::size_t>(j)].bid(values[static_cast<std::size_t>(j)]);
          if (values[static_cast<std::size_t>(j)] > values[static_cast<std::size_t>(m)]) m = j;
          if (bids[static_cast<std::size_t>(j)] > bids[static_cast<std::size_t>(winner)])
            winner = j;
        }
        const double v_star = values[static_cast<std::size_t>(winner)];
        const double b_star = bids[static_cast<std::size_t>(winner)];
        for (int i = 0; i < n; ++i) {
          double tau = -std::numeric_limits<double>::infinity();
          for (int j = 0; j < n; ++j) {
            if (j != i) tau = std::max(tau, bids[static_cast<std::size_t>(j)]);
          }
          rep.no_overbid.record(v_star - tau, tol);
        }
        if (winner != m) {
          const double vm = values[static_cast<std::size_t>(m)];
          const double bm = bids[static_cast<std::size_t>(m)];
          double floor = b_star;  // trivial payment bound fallback
          if (bm < vm && b_star >= bm) {
            try {
              floor = vbar(vm, instance.bidder(m).cdf(vm), bm, b_star);
            } catch (const std::domain_error&) {
              floor = b_star;
            }
          }
          rep.vbar_floor.record(v_star - floor, rep.slack);
        }
      }
    }
  }

  // (c): threshold-quantile floor on a (bidder, value, z) grid
  for (int i = 0; i < n; ++i) {
    const auto& d = instance.bidder(i);
    for (int k = 1; k <= value_grid; ++k) {
      const double q = static_cast<double>(k) / (value_grid + 1);
      const double v = d.quantile(q);
      const double b = strategies[static_cast<std::size_t>(i)].bid(v);
      double u_cond;
      try {
        u_cond = (v - b) * conditional_win_probability(instance, strategies, i, v, b);
      } catch (const degenerate_conditioning_error&) {
        continue;
      }
      if (u_cond < 0.0) continue;  // overbidding corrupts the utility; lemma premise gone
      for (int zi = 0; zi < z_grid; ++zi) {
        const double z = 0.1 + 0.9 * static_cast<double>(zi) / (z_grid - 1);
        const double tau_z = threshold_quantile(instance, strategies, i, v, z);
        if (tau_z < b - 1e-12) continue;  // lemma applies only above the own bid
        rep.threshold_floor.record(tau_z - tau_lower_bound(v, u_cond, z), rep.slack);
      }
    }
  }

  // (d): conditional misallocated-winner value vs both closed-form bounds
  {
    const std::int64_t per_point =
        std::max<std::int64_t>(1000, samples / (static_cast<std::int64_t>(n) * value_grid));
    std::vector<double> bids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const auto& d = instance.bidder(i);
      for (int k = 1; k <= value_grid; ++k) {
        const double q = static_cast<double>(k) / (value_grid + 1);
        const double v = d.quantile(q);
        const double b = strategies[static_cast<std::size_t>(i)].bid(v);
        double x_cond;
        try {
          x_cond = conditional_win_probability(instance, strategies, i, v, b);
        } catch (const degenerate_conditioning_error&) {
          continue;
        }
        const double u_cond = (v - b) * x_cond;
        Rng rng(derive_stream_seed(seed, 0xD0000 + static_cast<std::uint64_t>(i) * 1009 +
                                             static_cast<std::uint64_t>(k)));
        double acc = 0.0, accsq = 0.0;
        for (std::int64_t t = 0; t < per_point; ++t) {
          int winner = -1;
          double best_bid = -std::numeric_limits<double>::infinity();
          double winner_value = 0.0;
          for (int j = 0; j < n; ++j) {
            double vj, bj;
            if (j == i) {
              vj = v;
              bj = b;
            } else {
              const double fj = instance.bidder(j).cdf(v);
              vj = instance.bidder(j).quantile(rng.uniform01() * fj);
              bj = strategies[static_cast<std::size_t>(j)].bid(vj);
            }
            bids[static_cast<std::size_t>(j)] = bj;
            if (bj > best_bid) {
              best_bid = bj;
              winner = j;
              winner_value = vj;
            }
          }
          const double w = (winner != i) ? winner_value : 0.0;
          acc += w;
          accsq += w * w;
        }
        const double mean = acc / static_cast<double>(per_point);
        const double se = std::sqrt(
            std::max(0.0, accsq / static_cast<double>(per_point) - mean * mean) /
            static_cast<double>(per_point));
        const double slack_d = rep.slack + 4.0 * se;
        if (u_cond >= 0.0 && u_cond <= v * x_cond + 1e-12 * v) {
          rep.misalloc_old.record(mean - misalloc_lb_old(v, x_cond, u_cond), slack_d);
        }
        if (b < v && u_cond >= 0.0 && u_cond <= (v - b) + 1e-12 * v) {
          rep.misalloc_new.record(mean - misalloc_lb_new(v, d.cdf(v), b, u_cond), slack_d);
        }
      }
    }
  }
  return rep;
}

}  // namespace fpa
