#pragma once

// Auction model: instances, piecewise-linear bid strategies and their induced
// bid CDFs, interim quantities, conditional threshold-bid quantiles, and
// seeded outcome sampling for the sealed-bid first-price auction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpa/distribution.hpp"
#include "fpa/errors.hpp"
#include "fpa/numerics.hpp"
#include "fpa/rng.hpp"

namespace fpa {

class AuctionInstance {
 public:
  explicit AuctionInstance(std::vector<DistributionSpec> bidders) : bidders_(std::move(bidders)) {
    if (bidders_.size() < 2) throw std::invalid_argument("AuctionInstance: needs n >= 2 bidders");
  }

  int size() const { return static_cast<int>(bidders_.size()); }
  const DistributionSpec& bidder(int i) const { return bidders_.at(static_cast<std::size_t>(i)); }
  const std::vector<DistributionSpec>& bidders() const { return bidders_; }

  bool symmetric() const {
    return std::all_of(bidders_.begin() + 1, bidders_.end(),
                       [&](const DistributionSpec& d) { return d == bidders_.front(); });
  }

  double max_upper() const {
    double m = 0.0;
    for (const auto& d : bidders_) m = std::max(m, d.hi());
    return m;
  }

 private:
  std::vector<DistributionSpec> bidders_;
};

struct StrategyKnot {
  double value;
  double bid;
};

/// Monotone piecewise-linear value -> bid map. The constructor enforces the
/// structural invariants (strictly increasing values, nondecreasing bids);
/// overbidding (bid > value) is recorded rather than rejected so that the
/// lemma auditor can flag corrupted strategies instead of refusing them.
class BidStrategy {
 public:
  explicit BidStrategy(std::vector<StrategyKnot> knots) : knots_(std::move(knots)) {
    if (knots_.size() < 2) throw std::invalid_argument("BidStrategy: needs at least 2 knots");
    for (std::size_t k = 1; k < knots_.size(); ++k) {
      if (!(knots_[k].value > knots_[k - 1].value)) {
        throw std::invalid_argument("BidStrategy: knot values must be strictly increasing");
      }
      if (knots_[k].bid < knots_[k - 1].bid) {
        throw std::invalid_argument("BidStrategy: bids must be nondecreasing in value");
      }
    }
    overbids_ = std::any_of(knots_.begin(), knots_.end(),
                            [](const StrategyKnot& k) { return k.bid > k.value + 1e-12; });
  }

  const std::vector<StrategyKnot>& knots() const { return knots_; }
  double value_lo() const { return knots_.front().value; }
  double value_hi() const { return knots_.back().value; }
  double min_bid() const { return knots_.front().bid; }
  double max_bid() const { return knots_.back().bid; }
  bool overbids() const { return overbids_; }

  /// b_i(v); values outside the domain clamp to the nearest endpoint.
  double bid(double value) const {
    if (value <= value_lo()) return knots_.front().bid;
    if (value >= value_hi()) return knots_.back().bid;
    const auto it =
        std::upper_bound(knots_.begin(), knots_.end(), value,
                         [](double x, const StrategyKnot& k) { return x < k.value; });
    const StrategyKnot& r = *it;
    const StrategyKnot& l = *(it - 1);
    return l.bid + (r.bid - l.bid) * (value - l.value) / (r.value - l.value);
  }

  /// sup{ v : b(v) <= x } — flat segments resolve to their right end, which
  /// makes the induced bid CDF right-continuous. Returns value_lo()-1 when
  /// every bid exceeds x (no mass at or below x).
  double sup_value_at_bid(double x) const {
    if (x < min_bid()) return value_lo() - 1.0;
    if (x >= max_bid()) return value_hi();
    // last knot with bid <= x
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                               [](double b, const StrategyKnot& k) { return b < k.bid; });
    const StrategyKnot& l = *(it - 1);
    const StrategyKnot& r = *it;  // r.bid > x >= l.bid
    if (r.bid == l.bid) return r.value;
    return l.value + (r.value - l.value) * (x - l.bid) / (r.bid - l.bid);
  }

  /// sup{ v : b(v) < x } — left limit of the inverse, for the tie rule.
  double sup_value_below_bid(double x) const {
    if (x <= min_bid()) return value_lo() - 1.0;
    if (x > max_bid()) return value_hi();
    auto it = std::lower_bound(knots_.begin(), knots_.end(), x,
                               [](const StrategyKnot& k, double b) { return k.bid < b; });
    const StrategyKnot& r = *it;  // first knot with bid >= x
    const StrategyKnot& l = *(it - 1);
    if (r.bid == l.bid) return l.value;  // unreachable given lower_bound, kept for clarity
    return l.value + (r.value - l.value) * (x - l.bid) / (r.bid - l.bid);
  }

 private:
  std::vector<StrategyKnot> knots_;
  bool overbids_ = false;
};

using StrategyProfile = std::vector<BidStrategy>;

/// Profiles must have one strategy per bidder, defined on the full support.
inline void check_profile(const AuctionInstance& instance, const StrategyProfile& strategies,
                          double tol = 1e-6) {
  if (static_cast<int>(strategies.size()) != instance.size()) {
    throw std::invalid_argument("strategy profile size does not match bidder count");
  }
  for (int i = 0; i < instance.size(); ++i) {
    const auto& d = instance.bidder(i);
    const auto& s = strategies[static_cast<std::size_t>(i)];
    if (std::abs(s.value_lo() - d.lo()) > tol || std::abs(s.value_hi() - d.hi()) > tol) {
      throw std::invalid_argument("strategy domain does not match bidder " + std::to_string(i) +
                                  " support");
    }
  }
}

/// B_j(x) = P[b_j(v_j) <= x], right-continuous (flat strategy segments
/// create bid atoms).
inline double bid_cdf(const DistributionSpec& dist, const BidStrategy& s, double x) {
  const double v = s.sup_value_at_bid(x);
  if (v < s.value_lo()) return 0.0;
  return dist.cdf(v);
}

/// Left limit P[b_j(v_j) < x].
inline double bid_cdf_left(const DistributionSpec& dist, const BidStrategy& s, double x) {
  const double v = s.sup_value_below_bid(x);
  if (v < s.value_lo()) return 0.0;
  return dist.cdf(v);
}

/// Interim win probability of bidder i bidding b: prod_{j != i} B_j(b).
inline double win_probability(const AuctionInstance& instance, const StrategyProfile& strategies,
                              int i, double b) {
  check_profile(instance, strategies);
  double p = 1.0;
  for (int j = 0; j < instance.size(); ++j) {
    if (j == i) continue;
    p *= bid_cdf(instance.bidder(j), strategies[static_cast<std::size_t>(j)], b);
  }
  return p;
}

/// Win probability conditioned on E_i(v_i) = {v_j <= v_i for all j != i}:
/// prod_{j != i} min(B_j(b)/F_j(v_i), 1). Also the CDF of the conditional
/// threshold bid. Throws degenerate_conditioning_error if some F_j(v_i) = 0.
inline double conditional_win_probability(const AuctionInstance& instance,
                                          const StrategyProfile& strategies, int i, double v_i,
                                          double b) {
  check_profile(instance, strategies);
  double p = 1.0;
  for (int j = 0; j < instance.size(); ++j) {
    if (j == i) continue;
    const double fj = instance.bidder(j).cdf(v_i);
    if (fj <= 0.0) {
      throw degenerate_conditioning_error(
          "conditional_win_probability: event E_i(v_i) has zero probability");
    }
    p *= std::min(bid_cdf(instance.bidder(j), strategies[static_cast<std::size_t>(j)], b) / fj,
                  1.0);
  }
  return p;
}

struct InterimQuantities {
  double win_prob = 0.0;
  double expected_payment = 0.0;
  double expected_utility = 0.0;
  bool conditional = false;
};

/// Interim allocation/payment/utility of bidder i at value v_i under the
/// profile, optionally conditioned on E_i(v_i).
inline InterimQuantities interim(const AuctionInstance& instance,
                                 const StrategyProfile& strategies, int i, double v_i,
                                 bool conditional) {
  const double b = strategies.at(static_cast<std::size_t>(i)).bid(v_i);
  const double wp = conditional ? conditional_win_probability(instance, strategies, i, v_i, b)
                                : win_probability(instance, strategies, i, b);
  InterimQuantities q;
  q.win_prob = wp;
  q.expected_payment = b * wp;
  q.expected_utility = (v_i - b) * wp;
  q.conditional = conditional;
  return q;
}

namespace detail {

// Conditional support of the threshold bid of bidder i at value v_i:
// opponents are truncated to v_j <= v_i.
inline std::pair<double, double> conditional_threshold_range(const AuctionInstance& instance,
                                                             const StrategyProfile& strategies,
                                                             int i, double v_i) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < instance.size(); ++j) {
    if (j == i) continue;
    const auto& s = strategies[static_cast<std::size_t>(j)];
    lo = std::max(lo, s.min_bid());
    hi = std::max(hi, s.bid(std::min(v_i, instance.bidder(j).hi())));
  }
  return {lo, hi};
}

}  // namespace detail

/// tau_i(z, v_i): the z-quantile of bidder i's threshold bid conditioned on
/// E_i(v_i) — the inverse of conditional_win_probability in b. For z at or
/// below the mass of the minimum threshold, returns that infimum.
inline double threshold_quantile(const AuctionInstance& instance,
                                 const StrategyProfile& strategies, int i, double v_i, double z,
                                 ToleranceConfig tol = {1e-10, 1e-12, 200}) {
  if (!(z > 0.0 && z <= 1.0)) throw std::domain_error("threshold_quantile: z must be in (0,1]");
  const auto [b_lo, b_hi] = detail::conditional_threshold_range(instance, strategies, i, v_i);
  const auto g = [&](double b) {
    return conditional_win_probability(instance, strategies, i, v_i, b) - z;
  };
  if (g(b_lo) >= 0.0) return b_lo;
  if (b_hi <= b_lo) return b_lo;
  // G(b_hi) is 1 up to rounding; z at or above it means the top of the support
  if (g(b_hi) <= 0.0) return b_hi;
  return find_root(g, b_lo, b_hi, tol);
}

struct SampleOutcome {
  std::vector<double> values;
  std::vector<double> bids;
  int winner = 0;
  std::vector<double> thresholds;  // tau_i = max of others' bids
  double payment = 0.0;
};

/// Outcome of one play with the given realized values. Ties break to the
/// lowest index, which keeps seeded sampling reproducible.
inline SampleOutcome outcome_from_values(const StrategyProfile& strategies,
                                         std::vector<double> values) {
  const std::size_t n = strategies.size();
  if (values.size() != n) throw std::invalid_argument("outcome_from_values: size mismatch");
  SampleOutcome out;
  out.values = std::move(values);
  out.bids.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.bids[j] = strategies[j].bid(out.values[j]);
  out.winner = 0;
  for (std::size_t j = 1; j < n; ++j) {
    if (out.bids[j] > out.bids[static_cast<std::size_t>(out.winner)]) {
      out.winner = static_cast<int>(j);
    }
  }
  out.payment = out.bids[static_cast<std::size_t>(out.winner)];
  out.thresholds.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    double t = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) t = std::max(t, out.bids[k]);
    }
    out.thresholds[j] = t;
  }
  return out;
}

/// One seeded auction play: draws each value by inverse CDF, deterministic
/// for a fixed seed.
inline SampleOutcome sample_outcome(const AuctionInstance& instance,
                                    const StrategyProfile& strategies, std::uint64_t seed) {
  check_profile(instance, strategies);
  Rng rng(seed);
  std::vector<double> values(static_cast<std::size_t>(instance.size()));
  for (int j = 0; j < instance.size(); ++j) {
    values[static_cast<std::size_t>(j)] = instance.bidder(j).sample(rng);
  }
  return outcome_from_values(strategies, std::move(values));
}

}  // namespace fpa
