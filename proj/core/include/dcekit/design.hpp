#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "dcekit/data.hpp"

namespace dce {

/// Randomized choice-experiment layout.
///
/// Every non-opt-out alternative receives one outlet and one level per
/// attribute, each drawn uniformly and independently. Continuous
/// attributes draw from the finite grid in `grids`. `fixed_values` pins
/// an attribute for a given outlet (farm-gate sales have zero delivery
/// time, for instance); pinned values bypass the draw.
struct DesignConfig {
  Schema schema;
  Population population = Population::Consumer;
  std::size_t n_tasks = 6;
  /// Alternatives per task including the single opt-out (always last).
  std::size_t n_alts = 6;
  std::uint64_t seed = 0;
  std::vector<Outlet> outlets{kMarketOutlets.begin(), kMarketOutlets.end()};
  std::map<std::string, std::vector<double>> grids;
  std::map<Outlet, std::map<std::string, double>> fixed_values;
};

void validate_design_config(const DesignConfig& config);

struct Design {
  Schema schema;
  Population population = Population::Consumer;
  std::vector<Respondent> respondents;

  std::size_t n_alternatives() const noexcept;
  friend bool operator==(const Design&, const Design&) = default;
};

/// Deterministic in (config, n_respondents); each respondent draws from its
/// own substream so the result does not depend on `threads`.
Design generate_design(const DesignConfig& config, std::size_t n_respondents,
                       unsigned threads = 1);

struct BalanceReport {
  /// attribute ("outlet" included) -> level label -> count over
  /// non-opt-out alternatives.
  std::map<std::string, std::map<std::string, std::size_t>> frequencies;
  /// (attribute a, level a, attribute b, level b) with a < b in schema order.
  std::map<std::tuple<std::string, std::string, std::string, std::string>, std::size_t>
      co_occurrence;
  std::size_t n_alternatives = 0;

  /// Largest over smallest level count of one attribute.
  double max_min_ratio(const std::string& attribute) const;
};

BalanceReport design_balance_report(const Design& design);

void save_design(const std::filesystem::path& path, const Design& design);
Design load_design(const std::filesystem::path& path, const Schema& schema,
                   const LoadOptions& options = {});

/// Attribute sets of the two surveyed populations with illustrative level
/// grids.
DesignConfig consumer_design_preset(std::uint64_t seed);
DesignConfig farmer_design_preset(std::uint64_t seed);

}  // namespace dce
