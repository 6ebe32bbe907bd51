#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcekit/data.hpp"
#include "dcekit/mnl.hpp"

namespace dce {

/// CAP: consumer willingness to pay. CAV: farmer willingness to accept.
enum class WelfareDirection { CAP, CAV };

std::string_view to_string(WelfareDirection direction) noexcept;
WelfareDirection parse_welfare_direction(std::string_view text);

/// Ratios are refused when |b_price| / se(b_price) falls below this.
inline constexpr double kPriceSignificanceThreshold = 2.0;

struct RatioEstimate {
  double estimate = 0.0;
  double se = 0.0;
};

/// -b_k / b_price with a delta-method standard error. Throws
/// UnknownCoefficient and PriceCoefficientNearZero.
RatioEstimate wtp_ratio(const FitResult& fit, std::string_view coefficient);

struct BootstrapResult {
  double se = 0.0;
  /// Set when the price coefficient is weakly determined (|z| <= 5) and the
  /// ratio distribution is heavy tailed.
  bool heavy_tailed = false;
  std::size_t n_rep = 0;
};

/// Parametric bootstrap: draws (b_k, b_price) from their joint normal
/// sampling law and reports the sample sd of the ratio.
BootstrapResult wtp_bootstrap_se(const FitResult& fit, std::string_view coefficient,
                                 std::size_t n_rep, std::uint64_t seed);

struct WelfareEntry {
  std::string coefficient;
  double estimate = 0.0;
  double se = 0.0;
  /// "delta" or "bootstrap".
  std::string method = "delta";
  std::string formula;
  /// Plain-language reading of the value's sign.
  std::string reading;
};

struct WelfareTable {
  Population population = Population::Consumer;
  WelfareDirection direction = WelfareDirection::CAP;
  std::string model;
  std::string price_coefficient;
  double price_coefficient_used = 0.0;
  std::vector<WelfareEntry> entries;

  const WelfareEntry& entry(std::string_view coefficient) const;
};

struct BootstrapOptions {
  std::size_t n_rep = 0;
  std::uint64_t seed = 0;
};

/// One entry per non-price spec coefficient (sd parameters of a mixed
/// logit excluded). With bootstrap replicates requested each entry carries
/// the bootstrap se instead of the delta-method one.
WelfareTable welfare_table(const FitResult& fit, WelfareDirection direction,
                           const BootstrapOptions& bootstrap = {});

/// Coefficient names ordered by decreasing ratio.
std::vector<std::string> rank_by_ratio(const WelfareTable& table,
                                       const std::vector<std::string>& coefficients);

}  // namespace dce
