#include "dcekit/design.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "dcekit/error.hpp"
#include "dcekit/parallel.hpp"
#include "dcekit/rng.hpp"
#include "dcekit/serialize.hpp"

namespace dce {

void validate_design_config(const DesignConfig& config) {
  try {
    validate_schema(config.schema);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  if (config.n_tasks < 1) throw Error(ErrorCode::InvalidConfig, "n_tasks must be at least 1");
  if (config.n_alts < 2)
    throw Error(ErrorCode::InvalidConfig, "n_alts must be at least 2 (one slot is the opt-out)");
  if (config.outlets.empty()) throw Error(ErrorCode::InvalidConfig, "no outlets to draw from");
  for (Outlet o : config.outlets)
    if (o == Outlet::OptOut)
      throw Error(ErrorCode::InvalidConfig, "opt_out cannot be drawn as an outlet");

  for (const auto& [name, grid] : config.grids) {
    auto k = find_attribute(config.schema, name);
    if (!k) throw Error(ErrorCode::InvalidConfig, "grid for unknown attribute '" + name + "'");
    if (config.schema[*k].is_discrete())
      throw Error(ErrorCode::InvalidConfig, "grid given for discrete attribute '" + name + "'");
    if (grid.empty()) throw Error(ErrorCode::InvalidConfig, "empty grid for '" + name + "'");
    for (double v : grid)
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidConfig, "non-finite grid value for '" + name + "'");
  }
  for (const auto& a : config.schema)
    if (!a.is_discrete() && !config.grids.count(a.name))
      throw Error(ErrorCode::InvalidConfig, "continuous attribute '" + a.name + "' has no level grid");

  for (const auto& [outlet, values] : config.fixed_values) {
    if (outlet == Outlet::OptOut)
      throw Error(ErrorCode::InvalidConfig, "opt_out carries no attribute values");
    for (const auto& [name, value] : values) {
      auto k = find_attribute(config.schema, name);
      if (!k) throw Error(ErrorCode::InvalidConfig, "fixed value for unknown attribute '" + name + "'");
      const auto& def = config.schema[*k];
      if (!std::isfinite(value) ||
          (def.is_discrete() &&
           (value < 0 || value != std::floor(value) ||
            value >= static_cast<double>(def.levels.size()))))
        throw Error(ErrorCode::InvalidConfig, "invalid fixed value for '" + name + "'");
    }
  }
}

std::size_t Design::n_alternatives() const noexcept {
  std::size_t n = 0;
  for (const auto& r : respondents)
    for (const auto& t : r.tasks) n += t.alternatives.size() - 1;
  return n;
}

Design generate_design(const DesignConfig& config, std::size_t n_respondents, unsigned threads) {
  validate_design_config(config);
  const Schema& schema = config.schema;

  std::vector<const std::vector<double>*> grids(schema.size(), nullptr);
  for (std::size_t k = 0; k < schema.size(); ++k)
    if (!schema[k].is_discrete()) grids[k] = &config.grids.at(schema[k].name);

  Design design;
  design.schema = schema;
  design.population = config.population;
  design.respondents.resize(n_respondents);

  parallel_for(n_respondents, threads, [&](std::size_t i) {
    Rng rng(substream_seed(config.seed, stream::design, i));
    Respondent& r = design.respondents[i];
    r.respondent_id = std::to_string(i + 1);
    r.population = config.population;
    r.tasks.resize(config.n_tasks);
    for (std::size_t t = 0; t < config.n_tasks; ++t) {
      ChoiceTask& task = r.tasks[t];
      task.task_id = std::to_string(t + 1);
      task.alternatives.resize(config.n_alts);
      for (std::size_t j = 0; j + 1 < config.n_alts; ++j) {
        Alternative& alt = task.alternatives[j];
        alt.alt_id = std::to_string(j + 1);
        alt.outlet = config.outlets[rng.below(config.outlets.size())];
        alt.values.resize(schema.size());
        for (std::size_t k = 0; k < schema.size(); ++k) {
          if (schema[k].is_discrete())
            alt.values[k] = static_cast<double>(rng.below(schema[k].levels.size()));
          else
            alt.values[k] = (*grids[k])[rng.below(grids[k]->size())];
        }
        if (auto it = config.fixed_values.find(alt.outlet); it != config.fixed_values.end())
          for (const auto& [name, value] : it->second)
            alt.values[*find_attribute(schema, name)] = value;
      }
      Alternative& opt_out = task.alternatives.back();
      opt_out.alt_id = std::to_string(config.n_alts);
      opt_out.outlet = Outlet::OptOut;
    }
  });
  return design;
}

double BalanceReport::max_min_ratio(const std::string& attribute) const {
  const auto& counts = frequencies.at(attribute);
  std::size_t lo = std::numeric_limits<std::size_t>::max();
  std::size_t hi = 0;
  for (const auto& [_, c] : counts) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  if (lo == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(hi) / static_cast<double>(lo);
}

BalanceReport design_balance_report(const Design& design) {
  BalanceReport report;
  const Schema& schema = design.schema;
  for (const auto& a : schema)
    for (const auto& level : a.levels) report.frequencies[a.name][level] = 0;

  std::vector<std::string> labels(schema.size() + 1);
  for (const auto& r : design.respondents) {
    for (const auto& t : r.tasks) {
      for (const auto& alt : t.alternatives) {
        if (alt.is_opt_out()) continue;
        ++report.n_alternatives;
        labels[0] = std::string(to_string(alt.outlet));
        for (std::size_t k = 0; k < schema.size(); ++k)
          labels[k + 1] = format_value(schema[k], alt.values[k]);
        ++report.frequencies["outlet"][labels[0]];
        for (std::size_t k = 0; k < schema.size(); ++k) ++report.frequencies[schema[k].name][labels[k + 1]];
        for (std::size_t a = 0; a <= schema.size(); ++a) {
          const std::string& name_a = a == 0 ? std::string("outlet") : schema[a - 1].name;
          for (std::size_t b = a + 1; b <= schema.size(); ++b)
            ++report.co_occurrence[{name_a, labels[a], schema[b - 1].name, labels[b]}];
        }
      }
    }
  }
  return report;
}

void save_design(const std::filesystem::path& path, const Design& design) {
  std::ostringstream out;
  write_skeleton(out, design.schema, design.respondents);
  write_file_atomic(path, out.str());
}

Design load_design(const std::filesystem::path& path, const Schema& schema, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  Design d;
  d.schema = schema;
  d.respondents = read_skeleton(in, schema, options);
  if (!d.respondents.empty()) d.population = d.respondents.front().population;
  return d;
}

DesignConfig consumer_design_preset(std::uint64_t seed) {
  DesignConfig c;
  c.population = Population::Consumer;
  c.seed = seed;
  c.schema = {
      {"price", AttributeKind::Continuous, {}, "EUR/basket"},
      {"tt", AttributeKind::Continuous, {}, "min"},
      {"bio", AttributeKind::Binary, {"0", "1"}, ""},
      {"events", AttributeKind::Binary, {"0", "1"}, ""},
      {"range", AttributeKind::Categorical, {"vegetables", "food", "food_nonfood"}, ""},
  };
  c.grids["price"] = {5, 10, 15, 20, 25, 30};
  c.grids["tt"] = {5, 10, 15, 20, 30, 45};
  return c;
}

DesignConfig farmer_design_preset(std::uint64_t seed) {
  DesignConfig c;
  c.population = Population::Farmer;
  c.seed = seed;
  c.schema = {
      {"price", AttributeKind::Continuous, {}, "EUR/kg"},
      {"tt", AttributeKind::Continuous, {}, "min"},
      {"mutual_aid", AttributeKind::Binary, {"0", "1"}, ""},
      {"events", AttributeKind::Binary, {"0", "1"}, ""},
  };
  c.grids["price"] = {1, 2, 3, 4, 5, 6};
  c.grids["tt"] = {5, 10, 15, 20, 30, 45};
  c.fixed_values[Outlet::Ferme]["tt"] = 0.0;
  return c;
}

}  // namespace dce
