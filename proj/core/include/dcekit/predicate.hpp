#pragma once

#include <memory>
#include <set>
#include <string>
#include <string_view>

#include "dcekit/data.hpp"

namespace dce {

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

/// Boolean condition over respondent traits.
///
/// A comparison against a trait the respondent does not report is false.
/// Predicates are immutable values and cheap to copy.
class Predicate {
 public:
  /// True for every respondent.
  Predicate();

  static Predicate compare(std::string trait, CompareOp op, TraitValue value);

  /// Parses expressions such as `buys_sfsc == 1 && !(likert_support >= 4)`.
  /// Supports ==, !=, <, <=, >, >=, &&, ||, !, parentheses, numbers and
  /// double-quoted strings. `true` is the identity predicate.
  static Predicate parse(std::string_view text);

  bool operator()(const Respondent& respondent) const;

  std::set<std::string> referenced_traits() const;
  std::string to_string() const;

  friend Predicate operator&&(const Predicate& lhs, const Predicate& rhs);
  friend Predicate operator||(const Predicate& lhs, const Predicate& rhs);
  friend Predicate operator!(const Predicate& p);

  struct Node;

 private:
  explicit Predicate(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Respondents satisfying the predicate, schema unchanged. Throws
/// UnknownTrait when the predicate references an undeclared trait.
PanelDataset filter_subgroup(const PanelDataset& dataset, const Predicate& predicate);

/// Trait names used by the preset subgroups.
namespace traits {
inline constexpr std::string_view buys_sfsc = "buys_sfsc";
inline constexpr std::string_view no_sfsc_at_supermarket = "likert_no_sfsc_supermarket";
inline constexpr std::string_view sfsc_supports_farmers = "likert_sfsc_supports_farmers";
inline constexpr std::string_view sales_channels = "sales_channels";
inline constexpr std::string_view prefers_selling_sfsc = "likert_prefer_sell_sfsc";
}  // namespace traits

/// Consumer subgroups A (buys in short chains), B (never does), C (agrees
/// with preferring not to buy short-chain produce at the supermarket) and D
/// (agrees that short chains support farmers, and is not in C). C and D
/// are disjoint by construction. Agreement means a Likert answer >= 4.
Predicate consumer_group(char group);

/// Farmer subgroups 1 (sells only in short chains, sales_channels == "CC"),
/// 2 (only long chains, "CL"), 3 (both, "CC/CL"), 4 (prefers selling in
/// short chains, Likert >= 4).
Predicate farmer_group(int group);

/// Resolves "A".."D", "1".."4" to the presets above, anything else through
/// Predicate::parse.
Predicate subgroup_from_string(std::string_view text, Population population);

}  // namespace dce
