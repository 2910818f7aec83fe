// fpa — first-price auction welfare certification CLI.
//
// Subcommands:
//   constant   certify the welfare constant Phi = min_x int_x^1 ell / (1-x)
//   ell-table  dump the per-quantile worst-case table as CSV
//   solve      compute a Bayes-Nash equilibrium for an instance file
//   verify     best-response residual of supplied strategies
//   poa        equilibrium/optimal welfare ratio
//   audit      lemma-level inequality audit of a strategy profile
//
// Exit codes: 0 ok, 2 bad arguments, 3 parse failure, 4 solver
// non-convergence, 5 assertion failure (phi below the certified constant).

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpa/fpa.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadArgs = 2;
constexpr int kExitParse = 3;
constexpr int kExitNoConverge = 4;
constexpr int kExitAssert = 5;

struct CommonArgs {
  std::string instance_path;
  std::vector<std::string> strategy_paths;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::int64_t samples = 1000000;
  double tol = 1e-6;
  int threads = 0;
};

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << '\n';
  } else {
    fpa::write_file(out_path, text);
  }
}

fpa::StrategyProfile load_profile(const fpa::AuctionInstance& instance,
                                  const std::vector<std::string>& paths) {
  if (static_cast<int>(paths.size()) != instance.size()) {
    throw std::invalid_argument("expected one --strategy file per bidder (" +
                                std::to_string(instance.size()) + " bidders)");
  }
  fpa::StrategyProfile profile;
  for (const auto& p : paths) profile.push_back(fpa::load_strategy(p));
  fpa::check_profile(instance, profile);
  return profile;
}

fpa::EquilibriumSolution solve_instance(const fpa::AuctionInstance& instance, int threads) {
  if (instance.symmetric()) {
    fpa::SymmetricOptions opts;
    opts.threads = threads;
    return fpa::solve_symmetric(instance.bidder(0), instance.size(), opts);
  }
  if (instance.size() == 2) {
    fpa::AsymmetricOptions opts;
    opts.threads = threads;
    return fpa::solve_asymmetric_two(instance.bidder(0), instance.bidder(1), opts);
  }
  throw fpa::unsupported_instance_error(
      "solver handles symmetric instances and two-bidder asymmetric instances; supply "
      "--strategy files for other profiles");
}

int run_constant(const CommonArgs& args) {
  fpa::ToleranceConfig quad = fpa::ToleranceConfig::quadrature();
  fpa::ToleranceConfig mini = fpa::ToleranceConfig::minimization();
  const fpa::BoundReport report = fpa::phi_constant(quad, mini);
  nlohmann::json j = fpa::bound_report_to_json(report);
  emit(args.out_path, j.dump(2));
  if (!(report.phi >= 0.743)) {
    std::cerr << "constant: certified phi " << fpa::format12(report.phi)
              << " fell below 0.743\n";
    return kExitAssert;
  }
  return kExitOk;
}

int run_ell_table(const CommonArgs& args) {
  const fpa::BoundReport report = fpa::phi_constant();
  emit(args.out_path, fpa::ell_table_to_csv(report));
  return kExitOk;
}

int run_solve(const CommonArgs& args) {
  const auto instance = fpa::load_instance(args.instance_path);
  const auto sol = solve_instance(instance, args.threads);
  nlohmann::json j = fpa::solution_to_json(sol);
  if (!args.out_path.empty()) {
    for (int i = 0; i < instance.size(); ++i) {
      const std::string path = args.out_path + ".bidder" + std::to_string(i) + ".csv";
      fpa::write_file(path, fpa::strategy_to_csv(sol.strategies[static_cast<std::size_t>(i)]));
      j["strategy_files"].push_back(path);
    }
  }
  emit(args.out_path, j.dump(2));
  return kExitOk;
}

int run_verify(const CommonArgs& args) {
  const auto instance = fpa::load_instance(args.instance_path);
  const auto profile = load_profile(instance, args.strategy_paths);
  const double residual = fpa::best_response_residual(instance, profile, 201, 401, args.threads);
  nlohmann::json j;
  j["tool_version"] = fpa::kToolVersion;
  j["residual"] = fpa::round12(residual);
  j["value_grid"] = 201;
  j["bid_grid"] = 401;
  emit(args.out_path, j.dump(2));
  return kExitOk;
}

int run_poa(const CommonArgs& args) {
  const auto instance = fpa::load_instance(args.instance_path);
  fpa::StrategyProfile profile;
  if (!args.strategy_paths.empty()) {
    profile = load_profile(instance, args.strategy_paths);
  } else {
    profile = solve_instance(instance, args.threads).strategies;
  }
  const auto method =
      args.seed_set ? fpa::WelfareMethod::monte_carlo : fpa::WelfareMethod::quadrature;
  const auto est = fpa::equilibrium_welfare(instance, profile, method, args.seed, args.samples,
                                            args.threads);
  emit(args.out_path, fpa::welfare_to_json(est, args.seed).dump(2));
  return kExitOk;
}

int run_audit(const CommonArgs& args) {
  const auto instance = fpa::load_instance(args.instance_path);
  fpa::EquilibriumSolution sol;
  if (!args.strategy_paths.empty()) {
    sol.strategies = load_profile(instance, args.strategy_paths);
    sol.residual = fpa::best_response_residual(instance, sol.strategies, 201, 401, args.threads);
  } else {
    sol = solve_instance(instance, args.threads);
  }
  const auto report = fpa::audit_lemmas(instance, sol, args.seed, args.samples, args.tol);
  emit(args.out_path, fpa::audit_to_json(report).dump(2));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"first-price auction welfare certification"};
  app.require_subcommand(1);

  CommonArgs args;
  const auto add_common = [&](CLI::App* cmd, bool needs_instance, bool needs_seed) {
    auto* inst = cmd->add_option("--instance", args.instance_path, "instance JSON file");
    if (needs_instance) inst->required()->check(CLI::ExistingFile);
    auto* seed = cmd->add_option("--seed", args.seed, "RNG seed (required for sampling)");
    if (needs_seed) seed->required();
    seed->each([&](const std::string&) { args.seed_set = true; });
    cmd->add_option("--samples", args.samples, "Monte Carlo sample budget")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tol", args.tol, "audit tolerance / report tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", args.out_path, "output file (stdout if omitted)");
    cmd->add_option("--threads", args.threads, "worker cap (0 = machine parallelism)");
    cmd->add_option("--strategy", args.strategy_paths,
                    "strategy CSV, one per bidder in order (repeatable)");
  };

  auto* c_constant = app.add_subcommand("constant", "certify the welfare constant");
  add_common(c_constant, false, false);
  auto* c_ell = app.add_subcommand("ell-table", "dump the ell(q) table as CSV");
  add_common(c_ell, false, false);
  auto* c_solve = app.add_subcommand("solve", "solve for a Bayes-Nash equilibrium");
  add_common(c_solve, true, false);
  auto* c_verify = app.add_subcommand("verify", "best-response residual of strategies");
  add_common(c_verify, true, false);
  auto* c_poa = app.add_subcommand("poa", "welfare ratio of an equilibrium");
  add_common(c_poa, true, false);
  auto* c_audit = app.add_subcommand("audit", "lemma-level inequality audit");
  add_common(c_audit, true, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitBadArgs;
  }

  try {
    if (c_constant->parsed()) return run_constant(args);
    if (c_ell->parsed()) return run_ell_table(args);
    if (c_solve->parsed()) return run_solve(args);
    if (c_verify->parsed()) return run_verify(args);
    if (c_poa->parsed()) return run_poa(args);
    if (c_audit->parsed()) return run_audit(args);
  } catch (const fpa::parse_error& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const fpa::unsupported_instance_error& e) {
    std::cerr << "unsupported instance: " << e.what() << '\n';
    return kExitNoConverge;
  } catch (const fpa::convergence_error& e) {
    std::cerr << "solver did not converge: " << e.what() << '\n';
    return kExitNoConverge;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid arguments: " << e.what() << '\n';
    return kExitBadArgs;
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kExitBadArgs;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitBadArgs;
}
