#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fpa/auction.hpp"

using fpa::AuctionInstance;
using fpa::BidStrategy;
using fpa::DistributionSpec;
using fpa::StrategyKnot;
using fpa::StrategyProfile;

namespace {

// both bidders U[0,1], both bidding v/2
struct HalfBidFixture {
  AuctionInstance instance{{DistributionSpec::uniform(0, 1), DistributionSpec::uniform(0, 1)}};
  StrategyProfile strategies{BidStrategy({{0.0, 0.0}, {1.0, 0.5}}),
                             BidStrategy({{0.0, 0.0}, {1.0, 0.5}})};
};

}  // namespace

TEST_CASE("AuctionInstance needs at least two bidders") {
  CHECK_THROWS_AS(AuctionInstance({DistributionSpec::uniform(0, 1)}), std::invalid_argument);
  const AuctionInstance inst{{DistributionSpec::uniform(0, 1), DistributionSpec::uniform(0, 2)}};
  CHECK(inst.size() == 2);
  CHECK_FALSE(inst.symmetric());
  CHECK(inst.max_upper() == 2.0);
  const AuctionInstance sym{{DistributionSpec::uniform(0, 1), DistributionSpec::uniform(0, 1)}};
  CHECK(sym.symmetric());
}

TEST_CASE("BidStrategy structural invariants") {
  CHECK_THROWS_AS(BidStrategy({{0.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(BidStrategy({{0.0, 0.0}, {0.0, 0.1}}), std::invalid_argument);
  CHECK_THROWS_AS(BidStrategy({{0.0, 0.2}, {1.0, 0.1}}), std::invalid_argument);
  const BidStrategy honest({{0.0, 0.0}, {1.0, 0.5}});
  CHECK_FALSE(honest.overbids());
  const BidStrategy corrupt({{0.0, 0.2}, {1.0, 0.7}});
  CHECK(corrupt.overbids());
  CHECK(honest.bid(0.5) == Catch::Approx(0.25));
  CHECK(honest.bid(-1.0) == 0.0);   // clamps
  CHECK(honest.bid(2.0) == 0.5);
}

TEST_CASE("bid CDF of a flat strategy segment is right-continuous") {
  const auto d = DistributionSpec::uniform(0, 1);
  const BidStrategy s({{0.0, 0.0}, {0.5, 0.2}, {1.0, 0.2}});  // atom at bid 0.2
  CHECK(fpa::bid_cdf(d, s, 0.2) == Catch::Approx(1.0));
  CHECK(fpa::bid_cdf(d, s, 0.2 - 1e-9) == Catch::Approx(0.5).margin(1e-6));
  CHECK(fpa::bid_cdf_left(d, s, 0.2) == Catch::Approx(0.5).margin(1e-12));
  CHECK(fpa::bid_cdf(d, s, -0.1) == 0.0);
  CHECK(fpa::bid_cdf(d, s, 0.3) == 1.0);
}

TEST_CASE("win_probability against a v/2 opponent") {
  HalfBidFixture fx;
  CHECK(fpa::win_probability(fx.instance, fx.strategies, 0, 0.5) == Catch::Approx(1.0));
  // B_j(0.25) = P[v/2 <= 0.25] = 0.5, by hand
  CHECK(fpa::win_probability(fx.instance, fx.strategies, 0, 0.25) == Catch::Approx(0.5));
  CHECK(fpa::win_probability(fx.instance, fx.strategies, 0, 0.0) ==
        Catch::Approx(0.0).margin(1e-12));
  // nondecreasing in b
  double prev = 0.0;
  for (int k = 0; k <= 50; ++k) {
    const double p = fpa::win_probability(fx.instance, fx.strategies, 0, 0.5 * k / 50.0);
    CHECK(p >= prev - 1e-15);
    CHECK(p <= 1.0);
    prev = p;
  }
}

TEST_CASE("conditional_win_probability") {
  HalfBidFixture fx;
  // B_j(0.25)/F_j(0.5) = 0.5/0.5 = 1
  CHECK(fpa::conditional_win_probability(fx.instance, fx.strategies, 0, 0.5, 0.25) ==
        Catch::Approx(1.0));
  // conditioning on the full space at the upper support
  CHECK(fpa::conditional_win_probability(fx.instance, fx.strategies, 0, 1.0, 0.3) ==
        Catch::Approx(fpa::win_probability(fx.instance, fx.strategies, 0, 0.3)));
  // at or above the opponent's max bid
  CHECK(fpa::conditional_win_probability(fx.instance, fx.strategies, 0, 0.7, 0.6) == 1.0);
  CHECK(fpa::conditional_win_probability(fx.instance, fx.strategies, 0, 0.7, 0.35) >=
        fpa::win_probability(fx.instance, fx.strategies, 0, 0.35));
  CHECK_THROWS_AS(fpa::conditional_win_probability(fx.instance, fx.strategies, 0, 0.0, 0.1),
                  fpa::degenerate_conditioning_error);
}

TEST_CASE("conditional/unconditional ratio is nonincreasing in b") {
  HalfBidFixture fx;
  const double v = 0.6;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 50; ++k) {
    const double b = 0.5 * k / 50.0;
    const double uncond = fpa::win_probability(fx.instance, fx.strategies, 0, b);
    if (uncond <= 0.0) continue;
    const double cond = fpa::conditional_win_probability(fx.instance, fx.strategies, 0, v, b);
    const double ratio = cond / uncond;
    CHECK(ratio <= prev + 1e-12);
    prev = ratio;
  }
}

TEST_CASE("conditional win probability is a valid threshold-bid CDF") {
  HalfBidFixture fx;
  const double v = 0.6;
  double prev = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double b = 0.5 * k / 100.0;
    const double g = fpa::conditional_win_probability(fx.instance, fx.strategies, 0, v, b);
    CHECK(g >= prev - 1e-15);  // nondecreasing
    CHECK(g <= 1.0);
    prev = g;
  }
  // reaches 1 at the conditional opponent max bid b_j(v) = 0.3
  CHECK(fpa::conditional_win_probability(fx.instance, fx.strategies, 0, v, 0.3) ==
        Catch::Approx(1.0));
}

TEST_CASE("interim quantities") {
  HalfBidFixture fx;
  const auto top = fpa::interim(fx.instance, fx.strategies, 0, 1.0, false);
  CHECK(top.win_prob == Catch::Approx(1.0));
  CHECK(top.expected_utility == Catch::Approx(0.5));
  CHECK(top.expected_payment == Catch::Approx(0.5));

  const auto bottom = fpa::interim(fx.instance, fx.strategies, 0, 0.0, false);
  CHECK(bottom.expected_utility == Catch::Approx(0.0).margin(1e-12));

  const auto cond_top = fpa::interim(fx.instance, fx.strategies, 0, 1.0, true);
  CHECK(cond_top.win_prob == Catch::Approx(top.win_prob));
  CHECK(cond_top.expected_utility == Catch::Approx(top.expected_utility));
  CHECK(cond_top.conditional);
}

TEST_CASE("threshold_quantile inverts the conditional threshold CDF") {
  HalfBidFixture fx;
  // threshold CDF at v_i = 1 is B_j; its median is 0.25
  CHECK(fpa::threshold_quantile(fx.instance, fx.strategies, 0, 1.0, 0.5) ==
        Catch::Approx(0.25).margin(1e-8));
  // top quantile: the opponent's (conditional) maximum bid
  CHECK(fpa::threshold_quantile(fx.instance, fx.strategies, 0, 1.0, 1.0) ==
        Catch::Approx(0.5).margin(1e-8));
  CHECK(fpa::threshold_quantile(fx.instance, fx.strategies, 0, 0.6, 1.0) ==
        Catch::Approx(0.3).margin(1e-8));
  // z -> 0+ lands at the opponent's minimum bid
  CHECK(fpa::threshold_quantile(fx.instance, fx.strategies, 0, 1.0, 1e-9) ==
        Catch::Approx(0.0).margin(1e-6));
  CHECK_THROWS_AS(fpa::threshold_quantile(fx.instance, fx.strategies, 0, 1.0, 0.0),
                  std::domain_error);
  CHECK_THROWS_AS(fpa::threshold_quantile(fx.instance, fx.strategies, 0, 1.0, 1.5),
                  std::domain_error);

  // round trip and monotonicity on a z grid
  double prev_tau = -1.0;
  for (int k = 1; k <= 20; ++k) {
    const double z = static_cast<double>(k) / 20.0;
    const double tau = fpa::threshold_quantile(fx.instance, fx.strategies, 0, 0.8, z);
    CHECK(tau >= prev_tau - 1e-12);
    prev_tau = tau;
    const double back = fpa::conditional_win_probability(fx.instance, fx.strategies, 0, 0.8, tau);
    CHECK(back == Catch::Approx(z).margin(1e-6));
  }
}

TEST_CASE("outcome_from_values: winner, payment, thresholds, tie rule") {
  HalfBidFixture fx;
  const auto out = fpa::outcome_from_values(fx.strategies, {0.9, 0.1});
  CHECK(out.winner == 0);
  CHECK(out.payment == Catch::Approx(0.45));
  CHECK(out.bids[0] == Catch::Approx(0.45));
  CHECK(out.thresholds[0] == Catch::Approx(0.05));
  CHECK(out.thresholds[1] == Catch::Approx(0.45));

  // equal bids: lowest index wins
  const auto tie = fpa::outcome_from_values(fx.strategies, {0.4, 0.4});
  CHECK(tie.winner == 0);

  // invariants: winner attains the max bid, wins iff bid >= threshold
  for (int s = 0; s < 50; ++s) {
    const auto o = fpa::sample_outcome(fx.instance, fx.strategies, 1000 + s);
    const double maxbid = *std::max_element(o.bids.begin(), o.bids.end());
    CHECK(o.bids[static_cast<std::size_t>(o.winner)] == maxbid);
    CHECK(o.payment == maxbid);
    for (std::size_t i = 0; i < o.bids.size(); ++i) {
      const bool wins = static_cast<int>(i) == o.winner;
      if (wins) CHECK(o.bids[i] >= o.thresholds[i]);
    }
  }
}

TEST_CASE("sample_outcome is deterministic and statistically consistent") {
  HalfBidFixture fx;
  const auto a = fpa::sample_outcome(fx.instance, fx.strategies, 31337);
  const auto b = fpa::sample_outcome(fx.instance, fx.strategies, 31337);
  CHECK(a.values == b.values);
  CHECK(a.winner == b.winner);

  // winner-value mean over many plays matches E[max(v1,v2)] = 2/3
  const int n = 1000000;
  double sum = 0.0, sumsq = 0.0;
  for (int s = 0; s < n; ++s) {
    const auto o = fpa::sample_outcome(fx.instance, fx.strategies, static_cast<std::uint64_t>(s));
    const double w = o.values[static_cast<std::size_t>(o.winner)];
    sum += w;
    sumsq += w * w;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sumsq / n - mean * mean) / n);
  CHECK(std::abs(mean - 2.0 / 3.0) < 3.0 * se);
}

TEST_CASE("empirical win frequency matches win_probability") {
  HalfBidFixture fx;
  const double v_i = 0.7;
  const double b = fx.strategies[0].bid(v_i);
  const double p = fpa::win_probability(fx.instance, fx.strategies, 0, b);
  int wins = 0;
  const int n = 100000;
  fpa::Rng rng(555);
  for (int s = 0; s < n; ++s) {
    const double opp = fx.instance.bidder(1).sample(rng);
    if (b >= fx.strategies[1].bid(opp)) ++wins;
  }
  const double freq = static_cast<double>(wins) / n;
  const double se = std::sqrt(p * (1.0 - p) / n);
  CHECK(std::abs(freq - p) < 4.0 * se);
}

TEST_CASE("check_profile validates size and domains") {
  HalfBidFixture fx;
  StrategyProfile tooFew{fx.strategies[0]};
  CHECK_THROWS_AS(fpa::check_profile(fx.instance, tooFew), std::invalid_argument);
  StrategyProfile wrongDomain{BidStrategy({{0.0, 0.0}, {0.5, 0.2}}), fx.strategies[1]};
  CHECK_THROWS_AS(fpa::check_profile(fx.instance, wrongDomain), std::invalid_argument);
  CHECK_NOTHROW(fpa::check_profile(fx.instance, fx.strategies));
}
