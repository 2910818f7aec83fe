#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fpa/welfare.hpp"

using fpa::AuctionInstance;
using fpa::BidStrategy;
using fpa::DistributionSpec;
using fpa::StrategyProfile;
using fpa::WelfareMethod;

TEST_CASE("optimal_welfare: closed forms and Monte Carlo agreement") {
  const AuctionInstance sym({DistributionSpec::uniform(0, 1), DistributionSpec::uniform(0, 1)});
  CHECK(fpa::optimal_welfare(sym) == Catch::Approx(2.0 / 3.0).margin(1e-9));

  const AuctionInstance asym({DistributionSpec::uniform(0, 1), DistributionSpec::uniform(0, 2)});
  CHECK(fpa::optimal_welfare(asym) == Catch::Approx(13.0 / 12.0).margin(1e-9));

  // near-degenerate narrow support: E[max] ~ the upper end
  const auto narrow = DistributionSpec::piecewise_linear_cdf({{0.99, 0.0}, {1.0, 1.0}});
  const AuctionInstance degen({narrow, narrow});
  CHECK(fpa::optimal_welfare(degen) == Catch::Approx(1.0).margin(0.01));

  const auto mc = fpa::optimal_welfare_mc(asym, 404, 400000);
  CHECK(std::abs(mc.mean - 13.0 / 12.0) < 4.0 * mc.std_error);
}

TEST_CASE("equilibrium_welfare: symmetric efficiency and tie rule") {
  const auto d = DistributionSpec::uniform(0, 1);
  const AuctionInstance sym({d, d});
  const auto sol = fpa::solve_symmetric(d, 2);

  const auto wq = fpa::equilibrium_welfare(sym, sol.strategies, WelfareMethod::quadrature);
  CHECK(wq.ratio == Catch::Approx(1.0).margin(1e-6));
  CHECK(wq.ci_halfwidth == 0.0);

  const auto wm =
      fpa::equilibrium_welfare(sym, sol.strategies, WelfareMethod::monte_carlo, 31, 200000);
  CHECK(std::abs(wm.welf - wq.welf) < 4.0 * wm.ci_halfwidth * wm.opt + 1e-9);

  // constant zero bids, lowest index wins: welfare is E[v_1] = 1/2
  const StrategyProfile zeros{BidStrategy({{0.0, 0.0}, {1.0, 0.0}}),
                              BidStrategy({{0.0, 0.0}, {1.0, 0.0}})};
  const auto wz = fpa::equilibrium_welfare(sym, zeros, WelfareMethod::quadrature);
  CHECK(wz.welf == Catch::Approx(0.5).margin(1e-6));
  const auto wzm = fpa::equilibrium_welfare(sym, zeros, WelfareMethod::monte_carlo, 7, 200000);
  CHECK(wzm.welf == Catch::Approx(0.5).margin(4.0 * wzm.ci_halfwidth * wzm.opt + 1e-3));
}

TEST_CASE("equilibrium_welfare: asymmetric ratio lands in the certified band") {
  const auto d1 = DistributionSpec::uniform(0, 1);
  const auto d2 = DistributionSpec::uniform(0, 2);
  const AuctionInstance asym({d1, d2});
  const auto sol = fpa::solve_asymmetric_two(d1, d2);
  const auto w = fpa::equilibrium_welfare(asym, sol.strategies, WelfareMethod::quadrature);
  CHECK(w.ratio >= 0.743);
  CHECK(w.ratio <= 1.0);
  // closed-form equilibrium for this pair gives ~0.9811
  CHECK(w.ratio == Catch::Approx(0.981079).margin(1e-4));
  CHECK(w.welf <= w.opt);
}

TEST_CASE("decomposition_check: identity holds and reruns are identical") {
  const auto d1 = DistributionSpec::uniform(0, 1);
  const auto d2 = DistributionSpec::uniform(0, 2);
  const AuctionInstance asym({d1, d2});
  const auto sol = fpa::solve_asymmetric_two(d1, d2);

  const auto chk = fpa::decomposition_check(asym, sol.strategies, 2024, 300000);
  CHECK(chk.discrepancy <= 4.0 * chk.std_error + 1e-12);
  CHECK(chk.samples > 0);

  const auto again = fpa::decomposition_check(asym, sol.strategies, 2024, 300000);
  CHECK(chk.lhs == again.lhs);
  CHECK(chk.rhs == again.rhs);
  CHECK(chk.discrepancy == again.discrepancy);

  // symmetric case: both sides sit at the optimal welfare
  const AuctionInstance sym({d1, d1});
  const auto ssol = fpa::solve_symmetric(d1, 2);
  const auto schk = fpa::decomposition_check(sym, ssol.strategies, 99, 300000);
  CHECK(schk.discrepancy <= 4.0 * schk.std_error + 1e-12);
  CHECK(schk.lhs == Catch::Approx(2.0 / 3.0).margin(0.005));
  CHECK(schk.rhs == Catch::Approx(2.0 / 3.0).margin(0.005));
}

TEST_CASE("decomposition discrepancy shrinks at the Monte Carlo rate") {
  const auto d1 = DistributionSpec::uniform(0, 1);
  const auto d2 = DistributionSpec::uniform(0, 2);
  const AuctionInstance asym({d1, d2});
  const auto sol = fpa::solve_asymmetric_two(d1, d2);
  const auto small = fpa::decomposition_check(asym, sol.strategies, 3030, 10000);
  const auto large = fpa::decomposition_check(asym, sol.strategies, 3030, 1000000);
  CHECK(small.discrepancy <= 4.0 * small.std_error + 1e-12);
  CHECK(large.discrepancy <= 4.0 * large.std_error + 1e-12);
  // standard error scales as 1/sqrt(samples): factor 10 between these runs
  CHECK(small.std_error / large.std_error == Catch::Approx(10.0).epsilon(0.5));
}

TEST_CASE("gamma: endpoints and the optimal-welfare identity") {
  const auto d = DistributionSpec::uniform(0, 1);
  const AuctionInstance sym({d, d});
  CHECK(fpa::gamma(sym, 0, 0.0) == 0.0);
  CHECK(fpa::gamma(sym, 0, 1.0) == Catch::Approx(1.0));
  CHECK_THROWS_AS(fpa::gamma(sym, 0, 1.5), std::domain_error);

  CHECK(fpa::optimal_welfare_via_gamma(sym) ==
        Catch::Approx(fpa::optimal_welfare(sym)).margin(1e-6));

  const AuctionInstance mixed({DistributionSpec::power(2.0, 1.0),
                               DistributionSpec::uniform(0, 2),
                               DistributionSpec::piecewise_linear_cdf(
                                   {{0.0, 0.0}, {0.5, 0.7}, {1.5, 1.0}})});
  CHECK(fpa::optimal_welfare_via_gamma(mixed) ==
        Catch::Approx(fpa::optimal_welfare(mixed)).margin(1e-6));
}

TEST_CASE("audit_lemmas: clean on solved instances") {
  const auto d = DistributionSpec::uniform(0, 1);
  const AuctionInstance sym({d, d});
  const auto sol = fpa::solve_symmetric(d, 2);
  const auto rep = fpa::audit_lemmas(sym, sol, 11, 100000, 1e-6);
  CHECK(rep.total_violations() == 0);
  CHECK(rep.no_overbid.checks == 200000);
  CHECK(rep.threshold_floor.checks > 0);
  CHECK(rep.misalloc_old.checks > 0);
  CHECK(rep.misalloc_new.checks > 0);

  const auto d2 = DistributionSpec::uniform(0, 2);
  const AuctionInstance asym({d, d2});
  const auto asol = fpa::solve_asymmetric_two(d, d2);
  const auto arep = fpa::audit_lemmas(asym, asol, 11, 100000, 1e-6);
  CHECK(arep.total_violations() == 0);
  CHECK(arep.vbar_floor.checks > 0);  // misallocations do occur here
}

TEST_CASE("audit_lemmas: flags a corrupted strategy") {
  const auto d = DistributionSpec::uniform(0, 1);
  const AuctionInstance sym({d, d});
  auto sol = fpa::solve_symmetric(d, 2);

  std::vector<fpa::StrategyKnot> bumped;
  for (const auto& k : sol.strategies[0].knots()) bumped.push_back({k.value, k.bid + 0.2});
  fpa::EquilibriumSolution corrupted;
  corrupted.strategies = {BidStrategy(bumped), sol.strategies[1]};
  corrupted.residual =
      fpa::best_response_residual(sym, corrupted.strategies, 101, 201);

  const auto rep = fpa::audit_lemmas(sym, corrupted, 11, 50000, 1e-6);
  CHECK(rep.no_overbid.violations > 0);
  CHECK(rep.no_overbid.worst_margin < -0.1);
}

TEST_CASE("audit_lemmas is deterministic for a fixed seed") {
  const auto d = DistributionSpec::power(2.0, 1.0);
  const AuctionInstance inst({d, d});
  const auto sol = fpa::solve_symmetric(d, 2);
  const auto a = fpa::audit_lemmas(inst, sol, 77, 20000, 1e-6);
  const auto b = fpa::audit_lemmas(inst, sol, 77, 20000, 1e-6);
  CHECK(a.no_overbid.worst_margin == b.no_overbid.worst_margin);
  CHECK(a.misalloc_new.worst_margin == b.misalloc_new.worst_margin);
  CHECK(a.total_violations() == b.total_violations());
}
