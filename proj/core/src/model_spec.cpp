#include "dcekit/model_spec.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dcekit/error.hpp"

namespace dce {

std::string_view to_string(TravelTimeMode mode) noexcept {
  return mode == TravelTimeMode::PerOutlet ? "per_outlet" : "pooled";
}

TravelTimeMode parse_travel_time_mode(std::string_view text) {
  if (text == "per_outlet") return TravelTimeMode::PerOutlet;
  if (text == "pooled") return TravelTimeMode::Pooled;
  throw Error(ErrorCode::InvalidConfig, "unknown travel_time_mode '" + std::string(text) + "'");
}

std::string_view to_string(Coding coding) noexcept {
  return coding == Coding::Dummy ? "dummy" : "numeric";
}

Coding parse_coding(std::string_view text) {
  if (text == "dummy") return Coding::Dummy;
  if (text == "numeric") return Coding::Numeric;
  throw Error(ErrorCode::InvalidConfig, "unknown coding '" + std::string(text) + "'");
}

std::string intercept_name(Outlet outlet) { return "asc:" + std::string(to_string(outlet)); }

ModelSpec consumer_model_preset() {
  ModelSpec s;
  s.population = Population::Consumer;
  s.extra_attrs = {{"events", Coding::Dummy}, {"bio", Coding::Dummy}, {"range", Coding::Numeric}};
  return s;
}

ModelSpec farmer_model_preset(TravelTimeMode mode) {
  ModelSpec s;
  s.population = Population::Farmer;
  s.travel_time_mode = mode;
  if (mode == TravelTimeMode::PerOutlet)
    s.travel_time_outlets = {Outlet::Marche, Outlet::Supermarche, Outlet::Drive, Outlet::Association};
  s.extra_attrs = {{"events", Coding::Dummy}, {"mutual_aid", Coding::Dummy}};
  return s;
}

namespace {

std::size_t require_attribute(const Schema& schema, const std::string& name, std::string_view role) {
  auto k = find_attribute(schema, name);
  if (!k)
    throw Error(ErrorCode::InvalidConfig,
                std::string(role) + " attribute '" + name + "' is not in the schema");
  return *k;
}

}  // namespace

CompiledSpec::CompiledSpec(ModelSpec spec, Schema schema)
    : spec_(std::move(spec)), schema_(std::move(schema)) {
  validate_schema(schema_);

  std::set<Outlet> seen;
  for (Outlet o : spec_.outlet_intercepts) {
    if (o == Outlet::OptOut)
      throw Error(ErrorCode::InvalidConfig, "the opt-out has no intercept (its utility is 0)");
    if (!seen.insert(o).second)
      throw Error(ErrorCode::InvalidConfig, "duplicate intercept for '" + std::string(to_string(o)) + "'");
    CoefficientInfo c;
    c.name = intercept_name(o);
    c.role = CoefficientRole::Intercept;
    c.outlet = o;
    coefficients_.push_back(std::move(c));
  }

  std::set<std::string> used;
  const std::size_t price = require_attribute(schema_, spec_.price_attr, "price");
  if (schema_[price].is_discrete())
    throw Error(ErrorCode::InvalidConfig, "price attribute must be continuous");
  used.insert(spec_.price_attr);
  price_index_ = coefficients_.size();
  coefficients_.push_back({spec_.price_attr, CoefficientRole::Price, std::nullopt, price, std::nullopt});

  if (!spec_.travel_time_attr.empty()) {
    if (!used.insert(spec_.travel_time_attr).second)
      throw Error(ErrorCode::InvalidConfig, "travel time and price share an attribute");
    const std::size_t tt = require_attribute(schema_, spec_.travel_time_attr, "travel time");
    if (schema_[tt].is_discrete())
      throw Error(ErrorCode::InvalidConfig, "travel time attribute must be continuous");
    if (spec_.travel_time_mode == TravelTimeMode::Pooled) {
      coefficients_.push_back({spec_.travel_time_attr, CoefficientRole::TravelTime, std::nullopt, tt,
                               std::nullopt});
    } else {
      const auto& outlets =
          spec_.travel_time_outlets.empty() ? spec_.outlet_intercepts : spec_.travel_time_outlets;
      std::set<Outlet> tt_seen;
      for (Outlet o : outlets) {
        if (o == Outlet::OptOut)
          throw Error(ErrorCode::InvalidConfig, "the opt-out has no travel time");
        if (!tt_seen.insert(o).second)
          throw Error(ErrorCode::InvalidConfig, "duplicate travel-time outlet");
        coefficients_.push_back({spec_.travel_time_attr + ":" + std::string(to_string(o)),
                                 CoefficientRole::TravelTime, o, tt, std::nullopt});
      }
    }
  }

  for (const auto& extra : spec_.extra_attrs) {
    if (!used.insert(extra.name).second)
      throw Error(ErrorCode::InvalidConfig, "attribute '" + extra.name + "' enters the utility twice");
    const std::size_t k = require_attribute(schema_, extra.name, "extra");
    const auto& def = schema_[k];
    if (!def.is_discrete() || extra.coding == Coding::Numeric) {
      coefficients_.push_back({extra.name, CoefficientRole::Attribute, std::nullopt, k, std::nullopt});
    } else if (def.kind == AttributeKind::Binary) {
      coefficients_.push_back({extra.name, CoefficientRole::Attribute, std::nullopt, k, std::size_t{1}});
    } else {
      for (std::size_t l = 1; l < def.levels.size(); ++l)
        coefficients_.push_back(
            {extra.name + ":" + def.levels[l], CoefficientRole::Attribute, std::nullopt, k, l});
    }
  }
}

std::vector<std::string> CompiledSpec::names() const {
  std::vector<std::string> out;
  out.reserve(coefficients_.size());
  for (const auto& c : coefficients_) out.push_back(c.name);
  return out;
}

std::optional<std::size_t> CompiledSpec::find(std::string_view name) const {
  for (std::size_t i = 0; i < coefficients_.size(); ++i)
    if (coefficients_[i].name == name) return i;
  return std::nullopt;
}

std::size_t CompiledSpec::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw Error(ErrorCode::UnknownCoefficient, "unknown coefficient '" + std::string(name) + "'");
}

std::optional<std::size_t> CompiledSpec::intercept_index(Outlet outlet) const {
  for (std::size_t i = 0; i < coefficients_.size(); ++i)
    if (coefficients_[i].role == CoefficientRole::Intercept && coefficients_[i].outlet == outlet) return i;
  return std::nullopt;
}

std::optional<std::size_t> CompiledSpec::travel_time_index(Outlet outlet) const {
  for (std::size_t i = 0; i < coefficients_.size(); ++i) {
    const auto& c = coefficients_[i];
    if (c.role != CoefficientRole::TravelTime) continue;
    if (!c.outlet || *c.outlet == outlet) return i;
  }
  return std::nullopt;
}

bool CompiledSpec::has_travel_time(Outlet outlet) const {
  return outlet != Outlet::OptOut && travel_time_index(outlet).has_value();
}

void CompiledSpec::fill_row(const Alternative& alternative, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const {
  if (static_cast<std::size_t>(row.size()) != coefficients_.size())
    throw Error(ErrorCode::DimensionMismatch, "row size does not match the coefficient count");
  row.setZero();
  if (alternative.is_opt_out()) return;
  if (alternative.values.size() != schema_.size())
    throw Error(ErrorCode::InvalidDataset, "alternative '" + alternative.alt_id + "' lacks attribute values");
  for (std::size_t i = 0; i < coefficients_.size(); ++i) {
    const auto& c = coefficients_[i];
    const auto e = static_cast<Eigen::Index>(i);
    switch (c.role) {
      case CoefficientRole::Intercept:
        row[e] = alternative.outlet == *c.outlet ? 1.0 : 0.0;
        break;
      case CoefficientRole::Price:
        row[e] = alternative.values[c.attribute];
        break;
      case CoefficientRole::TravelTime:
        if (!c.outlet || *c.outlet == alternative.outlet) row[e] = alternative.values[c.attribute];
        break;
      case CoefficientRole::Attribute:
        if (c.level)
          row[e] = alternative.values[c.attribute] == static_cast<double>(*c.level) ? 1.0 : 0.0;
        else
          row[e] = alternative.values[c.attribute];
        break;
    }
  }
}

Eigen::RowVectorXd CompiledSpec::row(const Alternative& alternative) const {
  Eigen::RowVectorXd r(static_cast<Eigen::Index>(coefficients_.size()));
  fill_row(alternative, r);
  return r;
}

Eigen::MatrixXd CompiledSpec::task_matrix(const ChoiceTask& task) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(task.alternatives.size()),
                    static_cast<Eigen::Index>(coefficients_.size()));
  for (std::size_t j = 0; j < task.alternatives.size(); ++j)
    fill_row(task.alternatives[j], x.row(static_cast<Eigen::Index>(j)));
  return x;
}

EstimationData build_estimation_data(const PanelDataset& dataset, const CompiledSpec& spec) {
  if (dataset.schema() != spec.schema())
    throw Error(ErrorCode::InvalidConfig, "dataset schema differs from the model schema");
  EstimationData data;
  data.k = spec.size();
  data.respondents.resize(dataset.n_respondents());
  for (std::size_t i = 0; i < dataset.n_respondents(); ++i) {
    const auto& r = dataset.respondents()[i];
    auto& out = data.respondents[i].tasks;
    out.reserve(r.tasks.size());
    for (const auto& t : r.tasks) {
      if (!t.chosen) throw Error(ErrorCode::InvalidDataset, "task without a recorded choice");
      out.push_back({spec.task_matrix(t), *t.chosen});
      data.null_loglik -= std::log(static_cast<double>(t.alternatives.size()));
      ++data.n_obs;
    }
  }
  return data;
}

void check_identification(const EstimationData& data, const CompiledSpec& spec) {
  for (std::size_t k = 0; k < data.k; ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    bool varies = false;
    for (const auto& r : data.respondents) {
      for (const auto& t : r.tasks) {
        const auto c = t.x.col(col);
        if (c.maxCoeff() != c.minCoeff()) {
          varies = true;
          break;
        }
      }
      if (varies) break;
    }
    if (!varies)
      throw Error(ErrorCode::DegenerateData, "coefficient '" + spec.coefficients()[k].name +
                                                 "' has no variation within any task");
  }
}

}  // namespace dce
