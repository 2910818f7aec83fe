#pragma once

// File formats: instance JSON, strategy CSV (value,bid), and the JSON/CSV
// report emitters. All numeric output is serialized with 12 significant
// digits.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpa/auction.hpp"
#include "fpa/bounds.hpp"
#include "fpa/distribution.hpp"
#include "fpa/equilibrium.hpp"
#include "fpa/errors.hpp"
#include "fpa/welfare.hpp"

namespace fpa {

inline constexpr const char* kToolVersion = "0.1.0";

/// Round to 12 significant decimal digits so serialized reports diff cleanly
/// across platforms.
inline double round12(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return std::strtod(buf, nullptr);
}

inline std::string format12(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// instance JSON: {"bidders":[{"kind":"uniform","lo":0,"hi":1},
//                            {"kind":"power","a":2,"h":1},
//                            {"kind":"piecewise","knots":[[v,F],...]}]}
// ---------------------------------------------------------------------------

inline DistributionSpec parse_distribution(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) {
    throw parse_error("distribution entry must be an object with a \"kind\"");
  }
  const std::string kind = j.at("kind").get<std::string>();
  try {
    if (kind == "uniform") {
      return DistributionSpec::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
    }
    if (kind == "power") {
      return DistributionSpec::power(j.at("a").get<double>(), j.at("h").get<double>());
    }
    if (kind == "piecewise") {
      std::vector<std::pair<double, double>> knots;
      for (const auto& k : j.at("knots")) {
        knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
      }
      return DistributionSpec::piecewise_linear_cdf(std::move(knots));
    }
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("malformed distribution: ") + e.what());
  }
  throw parse_error("unknown distribution kind \"" + kind + "\"");
}

inline nlohmann::json distribution_to_json(const DistributionSpec& d) {
  nlohmann::json j;
  switch (d.kind()) {
    case DistKind::uniform:
      j = {{"kind", "uniform"}, {"lo", round12(d.lo())}, {"hi", round12(d.hi())}};
      break;
    case DistKind::power:
      j = {{"kind", "power"}, {"a", round12(d.exponent())}, {"h", round12(d.hi())}};
      break;
    case DistKind::piecewise: {
      j["kind"] = "piecewise";
      auto& arr = j["knots"] = nlohmann::json::array();
      for (const auto& k : d.knots()) arr.push_back({round12(k.first), round12(k.second)});
      break;
    }
  }
  return j;
}

inline AuctionInstance parse_instance_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("instance JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("bidders") || !j["bidders"].is_array()) {
    throw parse_error("instance JSON must be an object with a \"bidders\" array");
  }
  std::vector<DistributionSpec> bidders;
  for (const auto& d : j["bidders"]) bidders.push_back(parse_distribution(d));
  return AuctionInstance(std::move(bidders));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

inline AuctionInstance load_instance(const std::string& path) {
  return parse_instance_json(read_file(path));
}

// ---------------------------------------------------------------------------
// strategy CSV: header "value,bid", one knot per row
// ---------------------------------------------------------------------------

inline std::string strategy_to_csv(const BidStrategy& s) {
  std::ostringstream out;
  out << "value,bid\n";
  for (const auto& k : s.knots()) out << format12(k.value) << ',' << format12(k.bid) << '\n';
  return out.str();
}

inline BidStrategy parse_strategy_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw parse_error("strategy CSV: empty file");
  // tolerate trailing \r from foreign line endings
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "value,bid") throw parse_error("strategy CSV: expected header \"value,bid\"");
  std::vector<StrategyKnot> knots;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw parse_error("strategy CSV: missing comma on line " + std::to_string(lineno));
    }
    try {
      knots.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    } catch (const std::exception&) {
      throw parse_error("strategy CSV: bad number on line " + std::to_string(lineno));
    }
  }
  try {
    return BidStrategy(std::move(knots));
  } catch (const std::invalid_argument& e) {
    throw parse_error(std::string("strategy CSV: ") + e.what());
  }
}

inline BidStrategy load_strategy(const std::string& path) {
  return parse_strategy_csv(read_file(path));
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

inline nlohmann::json tolerances_to_json(const ToleranceConfig& t) {
  return {{"abs_tol", round12(t.abs_tol)}, {"rel_tol", round12(t.rel_tol)},
          {"max_iter", t.max_iter}};
}

inline nlohmann::json bound_report_to_json(const BoundReport& r) {
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["phi"] = round12(r.phi);
  j["argmin_x"] = round12(r.outer_argmin_x);
  j["grid"] = r.grid_size;
  j["tolerances"] = {{"quadrature", tolerances_to_json(r.quad_tol)},
                     {"minimization", tolerances_to_json(r.min_tol)}};
  return j;
}

inline std::string ell_table_to_csv(const BoundReport& r) {
  std::ostringstream out;
  out << "q,ell,argmin_r\n";
  for (const auto& row : r.ell_table) {
    out << format12(row.q) << ',' << format12(row.ell) << ',' << format12(row.argmin_r) << '\n';
  }
  return out.str();
}

inline nlohmann::json solution_to_json(const EquilibriumSolution& s) {
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["residual"] = round12(s.residual);
  j["b_bar"] = round12(s.meta.b_bar);
  j["knots_per_bidder"] = s.meta.knots;
  j["iterations"] = s.meta.iterations;
  j["bracket"] = {round12(s.meta.bracket_lo), round12(s.meta.bracket_hi)};
  j["value_grid"] = s.meta.value_grid;
  j["bid_grid"] = s.meta.bid_grid;
  return j;
}

inline nlohmann::json welfare_to_json(const WelfareEstimate& w, std::uint64_t seed) {
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["welf"] = round12(w.welf);
  j["opt"] = round12(w.opt);
  j["ratio"] = round12(w.ratio);
  j["ci"] = round12(w.ci_halfwidth);
  j["method"] = w.method == WelfareMethod::quadrature ? "quadrature" : "monte-carlo";
  j["samples"] = w.samples;
  j["seed"] = seed;
  return j;
}

inline nlohmann::json lemma_to_json(const LemmaAudit& a) {
  nlohmann::json j;
  j["checks"] = a.checks;
  j["violations"] = a.violations;
  j["worst_margin"] = a.checks > 0 ? round12(a.worst_margin) : 0.0;
  return j;
}

inline nlohmann::json audit_to_json(const AuditReport& r) {
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["lemma_a"] = lemma_to_json(r.no_overbid);
  j["lemma_b"] = lemma_to_json(r.vbar_floor);
  j["lemma_c"] = lemma_to_json(r.threshold_floor);
  j["lemma_d_old"] = lemma_to_json(r.misalloc_old);
  j["lemma_d_new"] = lemma_to_json(r.misalloc_new);
  j["seed"] = r.seed;
  j["samples"] = r.samples;
  j["tol"] = round12(r.tol);
  j["slack"] = round12(r.slack);
  j["residual"] = round12(r.residual);
  j["total_violations"] = r.total_violations();
  return j;
}

}  // namespace fpa
