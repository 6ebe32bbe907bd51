#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dce {

enum class AttributeKind { Continuous, Binary, Categorical };

std::string_view to_string(AttributeKind kind) noexcept;
AttributeKind parse_attribute_kind(std::string_view text);

/// One column of the choice-card attribute schema.
///
/// Binary and categorical attributes carry an ordered list of level labels;
/// the first label is the reference level when the attribute is dummy coded.
/// Continuous attributes carry no levels.
struct AttributeDef {
  std::string name;
  AttributeKind kind = AttributeKind::Continuous;
  std::vector<std::string> levels;
  std::string unit;

  bool is_discrete() const noexcept { return kind != AttributeKind::Continuous; }

  friend bool operator==(const AttributeDef&, const AttributeDef&) = default;
};

using Schema = std::vector<AttributeDef>;

/// Throws InvalidConfig when names repeat or level lists are malformed.
void validate_schema(const Schema& schema);

/// Position of `name` in the schema, if present.
std::optional<std::size_t> find_attribute(const Schema& schema, std::string_view name);

enum class Outlet { Ferme, Marche, Supermarche, Drive, Association, OptOut };

inline constexpr std::array<Outlet, 5> kMarketOutlets = {
    Outlet::Ferme, Outlet::Marche, Outlet::Supermarche, Outlet::Drive, Outlet::Association};

/// Canonical UTF-8 label (ferme, marché, supermarché, drive, association, opt_out).
std::string_view to_string(Outlet outlet) noexcept;

/// Accepts the canonical labels and their unaccented spellings.
Outlet parse_outlet(std::string_view text);

enum class Population { Consumer, Farmer };

std::string_view to_string(Population population) noexcept;
Population parse_population(std::string_view text);

/// One row of a choice card. `values` is aligned with the schema: continuous
/// attributes hold the number, discrete attributes hold the level index.
/// The opt-out alternative holds no values.
struct Alternative {
  std::string alt_id;
  Outlet outlet = Outlet::OptOut;
  std::vector<double> values;

  bool is_opt_out() const noexcept { return outlet == Outlet::OptOut; }

  friend bool operator==(const Alternative&, const Alternative&) = default;
};

struct ChoiceTask {
  std::string task_id;
  std::vector<Alternative> alternatives;
  /// Index into `alternatives`; empty for design skeletons.
  std::optional<std::size_t> chosen;

  const std::string& chosen_alt_id() const;
  std::size_t opt_out_index() const;

  friend bool operator==(const ChoiceTask&, const ChoiceTask&) = default;
};

using TraitValue = std::variant<double, std::string>;

struct Respondent {
  std::string respondent_id;
  Population population = Population::Consumer;
  std::vector<ChoiceTask> tasks;
  /// Missing traits are simply absent.
  std::map<std::string, TraitValue> traits;

  friend bool operator==(const Respondent&, const Respondent&) = default;
};

/// Traits whose name starts with this prefix are Likert items in {1, ..., 5}.
inline constexpr std::string_view kLikertPrefix = "likert_";

struct ValidationOptions {
  /// Required alternatives per task, opt-out included; 0 accepts any count >= 2.
  std::size_t alternatives_per_task = 6;
  bool require_choices = true;
};

/// Checks every task/respondent invariant; throws dce::Error on the first violation.
void validate_respondents(const Schema& schema, const std::vector<Respondent>& respondents,
                          const std::vector<std::string>& trait_names,
                          const ValidationOptions& options);

/// Validated, immutable panel of observed choices.
class PanelDataset {
 public:
  PanelDataset(Schema schema, std::vector<Respondent> respondents,
               std::vector<std::string> trait_names = {},
               const ValidationOptions& options = {});

  const Schema& schema() const noexcept { return schema_; }
  const std::vector<Respondent>& respondents() const noexcept { return respondents_; }
  const std::vector<std::string>& trait_names() const noexcept { return trait_names_; }

  std::size_t n_respondents() const noexcept { return respondents_.size(); }
  /// Total task observations, sum over respondents of their task counts.
  std::size_t n_task_observations() const noexcept { return n_tasks_; }

  bool has_trait(std::string_view name) const;

  friend bool operator==(const PanelDataset&, const PanelDataset&) = default;

 private:
  Schema schema_;
  std::vector<Respondent> respondents_;
  std::vector<std::string> trait_names_;
  std::size_t n_tasks_ = 0;
};

struct LoadOptions {
  std::size_t alternatives_per_task = 6;
};

/// Reads the long CSV format: resp_id, pop, task_id, alt_id, outlet, chosen,
/// one column per schema attribute, then optional trait columns. Lines
/// starting with '#' are skipped.
PanelDataset read_dataset(std::istream& in, const Schema& schema, const LoadOptions& options = {});
PanelDataset load_dataset(const std::filesystem::path& path, const Schema& schema,
                          const LoadOptions& options = {});

void write_dataset(std::ostream& out, const PanelDataset& dataset);
void save_dataset(const std::filesystem::path& path, const PanelDataset& dataset);

/// Long CSV without the `chosen` column (design skeletons).
void write_skeleton(std::ostream& out, const Schema& schema,
                    const std::vector<Respondent>& respondents);
std::vector<Respondent> read_skeleton(std::istream& in, const Schema& schema,
                                      const LoadOptions& options = {});

/// Display label of a stored attribute value (level label or number).
std::string format_value(const AttributeDef& attribute, double value);

struct TraitSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;
};

struct DatasetSummary {
  std::size_t n_respondents = 0;
  std::size_t n_task_observations = 0;
  /// Numeric traits: mean and sample standard deviation over respondents
  /// that report the trait.
  std::map<std::string, TraitSummary> numeric_traits;
  /// Text traits: share of each value among respondents that report it.
  std::map<std::string, std::map<std::string, double>> categorical_traits;
  /// Discrete attributes: share of each level over non-opt-out alternatives.
  std::map<std::string, std::map<std::string, double>> level_shares;
  /// Per outlet and attribute, mean of the stored value over presented
  /// alternatives (level index for discrete attributes, so binary means
  /// are shares of the second level).
  std::map<Outlet, std::map<std::string, double>> outlet_means;
  std::map<Outlet, std::size_t> outlet_counts;
  std::map<Outlet, double> chosen_shares;
};

DatasetSummary summarize(const PanelDataset& dataset);

}  // namespace dce
