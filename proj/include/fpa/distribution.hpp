#pragma once

// Bounded-support value distributions: uniform, power-law CDF (v/h)^a, and
// piecewise-linear CDF given by a knot list. All three expose CDF, density,
// quantile and inverse-transform sampling.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fpa/rng.hpp"

namespace fpa {

enum class DistKind { uniform, power, piecewise };

class DistributionSpec {
 public:
  static DistributionSpec uniform(double lo, double hi) {
    if (!(lo >= 0.0 && lo < hi) || !std::isfinite(hi)) {
      throw std::invalid_argument("uniform: requires 0 <= lo < hi < inf");
    }
    DistributionSpec d;
    d.kind_ = DistKind::uniform;
    d.lo_ = lo;
    d.hi_ = hi;
    return d;
  }

  /// CDF F(v) = (v/h)^a on [0, h].
  static DistributionSpec power(double exponent, double upper) {
    if (!(exponent > 0.0) || !(upper > 0.0) || !std::isfinite(upper)) {
      throw std::invalid_argument("power: requires exponent > 0 and 0 < upper < inf");
    }
    DistributionSpec d;
    d.kind_ = DistKind::power;
    d.lo_ = 0.0;
    d.hi_ = upper;
    d.exponent_ = exponent;
    return d;
  }

  /// CDF through the given (value, F) knots, linear between them.
  /// Knots must be strictly increasing in both coordinates, F: 0 -> 1.
  static DistributionSpec piecewise_linear_cdf(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw std::invalid_argument("piecewise: needs at least 2 knots");
    if (knots.front().second != 0.0 || knots.back().second != 1.0) {
      throw std::invalid_argument("piecewise: F must run from 0 to 1");
    }
    if (!(knots.front().first >= 0.0)) {
      throw std::invalid_argument("piecewise: support must be nonnegative");
    }
    for (std::size_t k = 1; k < knots.size(); ++k) {
      if (!(knots[k].first > knots[k - 1].first) || !(knots[k].second > knots[k - 1].second)) {
        throw std::invalid_argument("piecewise: knots must be strictly increasing in v and F");
      }
    }
    if (!std::isfinite(knots.back().first)) {
      throw std::invalid_argument("piecewise: support must be bounded");
    }
    DistributionSpec d;
    d.kind_ = DistKind::piecewise;
    d.lo_ = knots.front().first;
    d.hi_ = knots.back().first;
    d.knots_ = std::move(knots);
    return d;
  }

  DistKind kind() const { return kind_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double exponent() const { return exponent_; }
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

  double cdf(double v) const {
    if (v <= lo_) return 0.0;
    if (v >= hi_) return 1.0;
    switch (kind_) {
      case DistKind::uniform:
        return (v - lo_) / (hi_ - lo_);
      case DistKind::power:
        return std::pow(v / hi_, exponent_);
      case DistKind::piecewise: {
        const auto it = std::upper_bound(
            knots_.begin(), knots_.end(), v,
            [](double x, const std::pair<double, double>& k) { return x < k.first; });
        const auto& kr = *it;
        const auto& kl = *(it - 1);
        return kl.second + (kr.second - kl.second) * (v - kl.first) / (kr.first - kl.first);
      }
    }
    return 0.0;  // unreachable
  }

  double pdf(double v) const {
    if (v < lo_ || v > hi_) return 0.0;
    switch (kind_) {
      case DistKind::uniform:
        return 1.0 / (hi_ - lo_);
      case DistKind::power:
        return exponent_ * std::pow(v / hi_, exponent_ - 1.0) / hi_;
      case DistKind::piecewise: {
        const double x = std::min(std::max(v, lo_), hi_);
        auto it = std::upper_bound(
            knots_.begin(), knots_.end(), x,
            [](double a, const std::pair<double, double>& k) { return a < k.first; });
        if (it == knots_.end()) --it;
        const auto& kr = *it;
        const auto& kl = *(it - 1);
        return (kr.second - kl.second) / (kr.first - kl.first);
      }
    }
    return 0.0;  // unreachable
  }

  /// Inverse CDF; quantile(cdf(v)) = v at continuity points.
  double quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("quantile: p must be in [0,1]");
    switch (kind_) {
      case DistKind::uniform:
        return lo_ + p * (hi_ - lo_);
      case DistKind::power:
        return hi_ * std::pow(p, 1.0 / exponent_);
      case DistKind::piecewise: {
        if (p <= 0.0) return lo_;
        if (p >= 1.0) return hi_;
        const auto it = std::upper_bound(
            knots_.begin(), knots_.end(), p,
            [](double x, const std::pair<double, double>& k) { return x < k.second; });
        const auto& kr = *it;
        const auto& kl = *(it - 1);
        return kl.first + (kr.first - kl.first) * (p - kl.second) / (kr.second - kl.second);
      }
    }
    return lo_;  // unreachable
  }

  double sample(Rng& rng) const { return quantile(rng.uniform01()); }

  bool operator==(const DistributionSpec&) const = default;

 private:
  DistributionSpec() = default;

  DistKind kind_ = DistKind::uniform;
  double lo_ = 0.0;
  double hi_ = 1.0;
  double exponent_ = 0.0;
  std::vector<std::pair<double, double>> knots_;
};

}  // namespace fpa
