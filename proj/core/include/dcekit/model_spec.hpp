#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dcekit/data.hpp"

namespace dce {

enum class TravelTimeMode { PerOutlet, Pooled };
enum class Coding { Dummy, Numeric };

std::string_view to_string(TravelTimeMode mode) noexcept;
TravelTimeMode parse_travel_time_mode(std::string_view text);
std::string_view to_string(Coding coding) noexcept;
Coding parse_coding(std::string_view text);

struct ExtraAttribute {
  std::string name;
  /// Dummy: one 0/1 column per non-reference level. Numeric: the level
  /// index (or the value, for continuous attributes) enters directly.
  Coding coding = Coding::Dummy;

  friend bool operator==(const ExtraAttribute&, const ExtraAttribute&) = default;
};

/// Declarative linear-in-parameters utility:
///   U = asc[outlet] + b_price * price + b_tt[outlet] * tt + sum_k b_k * x_k
/// with the opt-out pinned at U = 0.
struct ModelSpec {
  Population population = Population::Consumer;
  std::vector<Outlet> outlet_intercepts{kMarketOutlets.begin(), kMarketOutlets.end()};
  std::string price_attr = "price";
  /// Empty disables travel-time terms.
  std::string travel_time_attr = "tt";
  TravelTimeMode travel_time_mode = TravelTimeMode::PerOutlet;
  /// Outlets with their own travel-time slope in per-outlet mode; empty
  /// means every intercept outlet. Outlets left out have structurally zero
  /// travel time (farm-gate sales for farmers).
  std::vector<Outlet> travel_time_outlets;
  std::vector<ExtraAttribute> extra_attrs;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

enum class CoefficientRole { Intercept, Price, TravelTime, Attribute };

struct CoefficientInfo {
  std::string name;
  CoefficientRole role = CoefficientRole::Attribute;
  /// Set for intercepts and per-outlet travel-time slopes.
  std::optional<Outlet> outlet;
  /// Schema index of the underlying attribute (not used by intercepts).
  std::size_t attribute = 0;
  /// Level index for dummy columns.
  std::optional<std::size_t> level;
};

/// A ModelSpec bound to a schema: coefficient layout and covariate rows.
class CompiledSpec {
 public:
  CompiledSpec(ModelSpec spec, Schema schema);

  const ModelSpec& spec() const noexcept { return spec_; }
  const Schema& schema() const noexcept { return schema_; }

  std::size_t size() const noexcept { return coefficients_.size(); }
  const std::vector<CoefficientInfo>& coefficients() const noexcept { return coefficients_; }
  std::vector<std::string> names() const;

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws UnknownCoefficient.
  std::size_t index_of(std::string_view name) const;

  std::size_t price_index() const noexcept { return price_index_; }
  std::optional<std::size_t> intercept_index(Outlet outlet) const;
  /// Pooled slope, the outlet's own slope, or empty when the outlet has
  /// structurally zero travel time.
  std::optional<std::size_t> travel_time_index(Outlet outlet) const;
  /// Outlets for which travel time enters the utility.
  bool has_travel_time(Outlet outlet) const;

  /// Covariate row of one alternative (all zeros for the opt-out).
  void fill_row(const Alternative& alternative, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const;
  Eigen::RowVectorXd row(const Alternative& alternative) const;
  /// One row per alternative, in task order.
  Eigen::MatrixXd task_matrix(const ChoiceTask& task) const;

 private:
  ModelSpec spec_;
  Schema schema_;
  std::vector<CoefficientInfo> coefficients_;
  std::size_t price_index_ = 0;
};

/// Coefficient naming used throughout: "asc:<outlet>", the price attribute
/// name, "<tt>:<outlet>" or "<tt>", "<attr>" or "<attr>:<level>".
std::string intercept_name(Outlet outlet);

/// Consumer utility: five outlet intercepts, price, per-outlet travel time,
/// events, bio and range (numeric coding), 14 coefficients.
ModelSpec consumer_model_preset();
/// Farmer utility: intercepts, price, travel time, events and mutual_aid.
/// Per-outlet mode leaves farm-gate sales without a travel-time slope
/// (12 coefficients); pooled mode has one slope (9 coefficients).
ModelSpec farmer_model_preset(TravelTimeMode mode = TravelTimeMode::PerOutlet);

struct TaskData {
  Eigen::MatrixXd x;
  std::size_t chosen = 0;
};

struct RespondentData {
  std::vector<TaskData> tasks;
};

/// Dataset compiled to design matrices for a given spec.
struct EstimationData {
  std::vector<RespondentData> respondents;
  std::size_t n_obs = 0;
  std::size_t k = 0;
  /// Equal-shares log-likelihood, sum over tasks of ln(1 / J_t).
  double null_loglik = 0.0;
};

EstimationData build_estimation_data(const PanelDataset& dataset, const CompiledSpec& spec);

/// Throws DegenerateData naming the first coefficient whose covariate is
/// constant within every task.
void check_identification(const EstimationData& data, const CompiledSpec& spec);

}  // namespace dce
