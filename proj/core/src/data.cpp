#include "dcekit/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "csv.hpp"
#include "dcekit/error.hpp"
#include "dcekit/serialize.hpp"

namespace dce {

std::string_view to_string(AttributeKind kind) noexcept {
  switch (kind) {
    case AttributeKind::Continuous: return "continuous";
    case AttributeKind::Binary: return "binary";
    case AttributeKind::Categorical: return "categorical";
  }
  return "continuous";
}

AttributeKind parse_attribute_kind(std::string_view text) {
  if (text == "continuous") return AttributeKind::Continuous;
  if (text == "binary") return AttributeKind::Binary;
  if (text == "categorical") return AttributeKind::Categorical;
  throw Error(ErrorCode::InvalidConfig, "unknown attribute kind '" + std::string(text) + "'");
}

void validate_schema(const Schema& schema) {
  std::set<std::string> seen;
  for (const auto& a : schema) {
    if (a.name.empty()) throw Error(ErrorCode::InvalidConfig, "attribute with empty name");
    if (!seen.insert(a.name).second)
      throw Error(ErrorCode::InvalidConfig, "duplicate attribute name '" + a.name + "'");
    if (a.kind == AttributeKind::Continuous && !a.levels.empty())
      throw Error(ErrorCode::InvalidConfig, "continuous attribute '" + a.name + "' declares levels");
    if (a.is_discrete()) {
      if (a.levels.size() < 2)
        throw Error(ErrorCode::InvalidConfig, "attribute '" + a.name + "' needs at least 2 levels");
      if (a.kind == AttributeKind::Binary && a.levels.size() != 2)
        throw Error(ErrorCode::InvalidConfig, "binary attribute '" + a.name + "' needs exactly 2 levels");
      std::set<std::string> labels(a.levels.begin(), a.levels.end());
      if (labels.size() != a.levels.size())
        throw Error(ErrorCode::InvalidConfig, "attribute '" + a.name + "' repeats a level label");
    }
  }
}

std::optional<std::size_t> find_attribute(const Schema& schema, std::string_view name) {
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i].name == name) return i;
  return std::nullopt;
}

std::string_view to_string(Outlet outlet) noexcept {
  switch (outlet) {
    case Outlet::Ferme: return "ferme";
    case Outlet::Marche: return "marché";
    case Outlet::Supermarche: return "supermarché";
    case Outlet::Drive: return "drive";
    case Outlet::Association: return "association";
    case Outlet::OptOut: return "opt_out";
  }
  return "opt_out";
}

Outlet parse_outlet(std::string_view text) {
  if (text == "ferme") return Outlet::Ferme;
  if (text == "marché" || text == "marche") return Outlet::Marche;
  if (text == "supermarché" || text == "supermarche") return Outlet::Supermarche;
  if (text == "drive") return Outlet::Drive;
  if (text == "association") return Outlet::Association;
  if (text == "opt_out") return Outlet::OptOut;
  throw Error(ErrorCode::InvalidDataset, "unknown outlet '" + std::string(text) + "'");
}

std::string_view to_string(Population population) noexcept {
  return population == Population::Consumer ? "consumer" : "farmer";
}

Population parse_population(std::string_view text) {
  if (text == "consumer") return Population::Consumer;
  if (text == "farmer") return Population::Farmer;
  throw Error(ErrorCode::InvalidDataset, "unknown population '" + std::string(text) + "'");
}

const std::string& ChoiceTask::chosen_alt_id() const {
  if (!chosen || *chosen >= alternatives.size())
    throw Error(ErrorCode::InvalidDataset, "task '" + task_id + "' has no chosen alternative");
  return alternatives[*chosen].alt_id;
}

std::size_t ChoiceTask::opt_out_index() const {
  for (std::size_t j = 0; j < alternatives.size(); ++j)
    if (alternatives[j].is_opt_out()) return j;
  throw Error(ErrorCode::InvalidDataset, "task '" + task_id + "' has no opt-out alternative");
}

namespace {

std::string where(const Respondent& r, const ChoiceTask& t) {
  return "respondent '" + r.respondent_id + "', task '" + t.task_id + "'";
}

void validate_task(const Schema& schema, const Respondent& r, const ChoiceTask& t,
                   const ValidationOptions& options) {
  const auto n = t.alternatives.size();
  if (n < 2) throw Error(ErrorCode::InvalidDataset, where(r, t) + ": fewer than 2 alternatives");
  if (options.alternatives_per_task != 0 && n != options.alternatives_per_task)
    throw Error(ErrorCode::InvalidDataset,
                where(r, t) + ": " + std::to_string(n) + " alternatives, expected " +
                    std::to_string(options.alternatives_per_task));
  std::size_t opt_outs = 0;
  std::set<std::string> ids;
  for (const auto& a : t.alternatives) {
    if (!ids.insert(a.alt_id).second)
      throw Error(ErrorCode::InvalidDataset, where(r, t) + ": duplicate alt_id '" + a.alt_id + "'");
    if (a.is_opt_out()) {
      ++opt_outs;
      if (!a.values.empty())
        throw Error(ErrorCode::InvalidDataset, where(r, t) + ": opt-out carries attribute values");
      continue;
    }
    if (a.values.size() != schema.size())
      throw Error(ErrorCode::InvalidDataset,
                  where(r, t) + ": alternative '" + a.alt_id + "' lacks attribute values");
    for (std::size_t k = 0; k < schema.size(); ++k) {
      const double v = a.values[k];
      if (!std::isfinite(v))
        throw Error(ErrorCode::NonNumericContinuous,
                    where(r, t) + ": non-finite value for '" + schema[k].name + "'");
      if (schema[k].is_discrete()) {
        if (v < 0 || v != std::floor(v) || v >= static_cast<double>(schema[k].levels.size()))
          throw Error(ErrorCode::UnknownLevel,
                      where(r, t) + ": invalid level index for '" + schema[k].name + "'");
      }
    }
  }
  if (opt_outs != 1)
    throw Error(ErrorCode::InvalidDataset, where(r, t) + ": expected exactly one opt-out, found " +
                                               std::to_string(opt_outs));
  if (options.require_choices) {
    if (!t.chosen || *t.chosen >= n)
      throw Error(ErrorCode::DuplicateChoice, where(r, t) + ": no chosen alternative");
  } else if (t.chosen && *t.chosen >= n) {
    throw Error(ErrorCode::InvalidDataset, where(r, t) + ": chosen index out of range");
  }
}

}  // namespace

void validate_respondents(const Schema& schema, const std::vector<Respondent>& respondents,
                          const std::vector<std::string>& trait_names,
                          const ValidationOptions& options) {
  validate_schema(schema);
  const std::set<std::string> declared(trait_names.begin(), trait_names.end());
  std::set<std::string> ids;
  for (const auto& r : respondents) {
    if (!ids.insert(r.respondent_id).second)
      throw Error(ErrorCode::InvalidDataset, "duplicate respondent id '" + r.respondent_id + "'");
    std::set<std::string> task_ids;
    for (const auto& t : r.tasks) {
      if (!task_ids.insert(t.task_id).second)
        throw Error(ErrorCode::InvalidDataset,
                    where(r, t) + ": task id repeated within respondent");
      validate_task(schema, r, t, options);
    }
    for (const auto& [name, value] : r.traits) {
      if (!declared.count(name))
        throw Error(ErrorCode::UnknownTrait,
                    "respondent '" + r.respondent_id + "' has undeclared trait '" + name + "'");
      if (name.starts_with(kLikertPrefix)) {
        const double* v = std::get_if<double>(&value);
        if (!v || *v < 1 || *v > 5 || *v != std::floor(*v))
          throw Error(ErrorCode::InvalidDataset, "respondent '" + r.respondent_id +
                                                     "': Likert trait '" + name +
                                                     "' outside {1,...,5}");
      }
    }
  }
}

PanelDataset::PanelDataset(Schema schema, std::vector<Respondent> respondents,
                           std::vector<std::string> trait_names, const ValidationOptions& options)
    : schema_(std::move(schema)),
      respondents_(std::move(respondents)),
      trait_names_(std::move(trait_names)) {
  validate_respondents(schema_, respondents_, trait_names_, options);
  for (const auto& r : respondents_) n_tasks_ += r.tasks.size();
}

bool PanelDataset::has_trait(std::string_view name) const {
  return std::find(trait_names_.begin(), trait_names_.end(), name) != trait_names_.end();
}

std::string format_value(const AttributeDef& attribute, double value) {
  if (attribute.is_discrete()) return attribute.levels.at(static_cast<std::size_t>(value));
  return format_double(value);
}

// ---------------------------------------------------------------------------
// Long CSV

namespace {

constexpr std::string_view kFixedColumns[] = {"resp_id", "pop", "task_id", "alt_id", "outlet"};

std::optional<double> parse_number(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

bool is_missing(std::string_view cell) { return cell.empty() || cell == "NA"; }

TraitValue parse_trait(std::string_view cell) {
  if (auto number = parse_number(cell)) return *number;
  return std::string(cell);
}

std::string trait_text(const TraitValue& value) {
  if (const double* d = std::get_if<double>(&value)) return format_double(*d);
  return std::get<std::string>(value);
}

struct Header {
  std::vector<std::size_t> fixed;      // kFixedColumns positions
  std::optional<std::size_t> chosen;
  std::vector<std::size_t> attributes; // schema order
  std::vector<std::pair<std::string, std::size_t>> traits;
};

Header parse_header(const std::vector<std::string>& cells, const Schema& schema, bool with_choice) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!index.emplace(cells[i], i).second)
      throw Error(ErrorCode::InvalidDataset, "duplicate column '" + cells[i] + "'");
  }
  auto require = [&](std::string_view name) {
    auto it = index.find(std::string(name));
    if (it == index.end())
      throw Error(ErrorCode::MissingColumn, "missing column '" + std::string(name) + "'");
    return it->second;
  };
  Header h;
  std::set<std::size_t> used;
  for (auto name : kFixedColumns) used.insert(h.fixed.emplace_back(require(name)));
  if (with_choice) {
    h.chosen = require("chosen");
    used.insert(*h.chosen);
  }
  for (const auto& a : schema) used.insert(h.attributes.emplace_back(require(a.name)));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (used.count(i)) continue;
    if (!with_choice && cells[i] == "chosen") continue;
    h.traits.emplace_back(cells[i], i);
  }
  return h;
}

struct Rows {
  Header header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

Rows read_rows(std::istream& in, const Schema& schema, bool with_choice) {
  Rows out;
  std::size_t line_no = 0;
  bool have_header = false;
  csv::Reader reader(in);
  std::vector<std::string> cells;
  while (reader.next(cells, line_no)) {
    if (!cells.empty() && !cells[0].empty() && cells[0][0] == '#') continue;
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (!have_header) {
      out.header = parse_header(cells, schema, with_choice);
      have_header = true;
      continue;
    }
    out.rows.push_back(cells);
    out.line_numbers.push_back(line_no);
  }
  if (!have_header) throw Error(ErrorCode::MissingColumn, "input has no header row");
  return out;
}

double parse_attribute(const AttributeDef& def, std::string_view cell, std::size_t line) {
  if (def.is_discrete()) {
    auto it = std::find(def.levels.begin(), def.levels.end(), cell);
    if (it == def.levels.end())
      throw Error(ErrorCode::UnknownLevel, "line " + std::to_string(line) + ": unknown level '" +
                                               std::string(cell) + "' for '" + def.name + "'");
    return static_cast<double>(it - def.levels.begin());
  }
  auto value = parse_number(cell);
  if (!value || !std::isfinite(*value))
    throw Error(ErrorCode::NonNumericContinuous, "line " + std::to_string(line) +
                                                     ": non-numeric value '" + std::string(cell) +
                                                     "' for '" + def.name + "'");
  return *value;
}

struct Assembled {
  std::vector<Respondent> respondents;
  std::vector<std::string> trait_names;
};

Assembled assemble(const Rows& data, const Schema& schema, bool with_choice) {
  const Header& h = data.header;
  Assembled out;
  for (const auto& [name, _] : h.traits) out.trait_names.push_back(name);

  std::unordered_map<std::string, std::size_t> respondent_index;
  std::vector<std::unordered_map<std::string, std::size_t>> task_index;
  std::vector<std::vector<std::size_t>> chosen_counts;

  for (std::size_t row_i = 0; row_i < data.rows.size(); ++row_i) {
    const auto& row = data.rows[row_i];
    const std::size_t line = data.line_numbers[row_i];
    if (row.size() < h.fixed.size())
      throw Error(ErrorCode::InvalidDataset, "line " + std::to_string(line) + ": too few cells");
    auto cell = [&](std::size_t col) -> std::string_view {
      if (col >= row.size())
        throw Error(ErrorCode::InvalidDataset, "line " + std::to_string(line) + ": too few cells");
      return row[col];
    };

    const std::string resp_id(cell(h.fixed[0]));
    const Population pop = parse_population(cell(h.fixed[1]));
    const std::string task_id(cell(h.fixed[2]));
    Alternative alt;
    alt.alt_id = std::string(cell(h.fixed[3]));
    alt.outlet = parse_outlet(cell(h.fixed[4]));

    auto [rit, new_resp] = respondent_index.emplace(resp_id, out.respondents.size());
    if (new_resp) {
      Respondent r;
      r.respondent_id = resp_id;
      r.population = pop;
      for (const auto& [name, col] : h.traits) {
        auto text = cell(col);
        if (!is_missing(text)) r.traits.emplace(name, parse_trait(text));
      }
      out.respondents.push_back(std::move(r));
      task_index.emplace_back();
      chosen_counts.emplace_back();
    } else {
      const Respondent& r = out.respondents[rit->second];
      if (r.population != pop)
        throw Error(ErrorCode::InvalidDataset,
                    "line " + std::to_string(line) + ": population changes within respondent");
      for (const auto& [name, col] : h.traits) {
        auto text = cell(col);
        auto it = r.traits.find(name);
        const bool missing = is_missing(text);
        if (missing != (it == r.traits.end()) ||
            (!missing && trait_text(it->second) != trait_text(parse_trait(text))))
          throw Error(ErrorCode::InvalidDataset, "line " + std::to_string(line) + ": trait '" +
                                                     name + "' differs within respondent");
      }
    }
    const std::size_t ri = rit->second;
    Respondent& respondent = out.respondents[ri];

    if (alt.outlet != Outlet::OptOut) {
      alt.values.reserve(schema.size());
      for (std::size_t k = 0; k < schema.size(); ++k) {
        auto text = cell(h.attributes[k]);
        if (is_missing(text))
          throw Error(schema[k].is_discrete() ? ErrorCode::UnknownLevel
                                              : ErrorCode::NonNumericContinuous,
                      "line " + std::to_string(line) + ": missing value for '" + schema[k].name +
                          "'");
        alt.values.push_back(parse_attribute(schema[k], text, line));
      }
    } else {
      for (std::size_t k = 0; k < schema.size(); ++k)
        if (!is_missing(cell(h.attributes[k])))
          throw Error(ErrorCode::InvalidDataset,
                      "line " + std::to_string(line) + ": opt-out row carries attribute values");
    }

    auto [tit, new_task] = task_index[ri].emplace(task_id, respondent.tasks.size());
    if (new_task) {
      ChoiceTask t;
      t.task_id = task_id;
      respondent.tasks.push_back(std::move(t));
      chosen_counts[ri].push_back(0);
    }
    ChoiceTask& task = respondent.tasks[tit->second];
    if (with_choice) {
      auto flag = cell(*h.chosen);
      if (flag == "1") {
        task.chosen = task.alternatives.size();
        ++chosen_counts[ri][tit->second];
      } else if (flag != "0") {
        throw Error(ErrorCode::InvalidDataset, "line " + std::to_string(line) +
                                                   ": chosen must be 0 or 1, got '" +
                                                   std::string(flag) + "'");
      }
    }
    task.alternatives.push_back(std::move(alt));
  }

  if (with_choice) {
    for (std::size_t ri = 0; ri < out.respondents.size(); ++ri)
      for (std::size_t ti = 0; ti < out.respondents[ri].tasks.size(); ++ti)
        if (chosen_counts[ri][ti] != 1)
          throw Error(ErrorCode::DuplicateChoice,
                      "respondent '" + out.respondents[ri].respondent_id + "', task '" +
                          out.respondents[ri].tasks[ti].task_id + "': " +
                          std::to_string(chosen_counts[ri][ti]) + " chosen rows");
  }
  return out;
}

void write_long(std::ostream& out, const Schema& schema, const std::vector<Respondent>& respondents,
                const std::vector<std::string>& trait_names, bool with_choice) {
  csv::Writer w(out);
  std::vector<std::string> header = {"resp_id", "pop", "task_id", "alt_id", "outlet"};
  if (with_choice) header.emplace_back("chosen");
  for (const auto& a : schema) header.push_back(a.name);
  for (const auto& t : trait_names) header.push_back(t);
  w.row(header);

  std::vector<std::string> cells;
  for (const auto& r : respondents) {
    std::vector<std::string> traits;
    for (const auto& name : trait_names) {
      auto it = r.traits.find(name);
      traits.push_back(it == r.traits.end() ? std::string() : trait_text(it->second));
    }
    for (const auto& t : r.tasks) {
      for (std::size_t j = 0; j < t.alternatives.size(); ++j) {
        const auto& a = t.alternatives[j];
        cells.clear();
        cells.push_back(r.respondent_id);
        cells.emplace_back(to_string(r.population));
        cells.push_back(t.task_id);
        cells.push_back(a.alt_id);
        cells.emplace_back(to_string(a.outlet));
        if (with_choice) cells.emplace_back(t.chosen && *t.chosen == j ? "1" : "0");
        for (std::size_t k = 0; k < schema.size(); ++k)
          cells.push_back(a.is_opt_out() ? std::string() : format_value(schema[k], a.values[k]));
        cells.insert(cells.end(), traits.begin(), traits.end());
        w.row(cells);
      }
    }
  }
}

}  // namespace

PanelDataset read_dataset(std::istream& in, const Schema& schema, const LoadOptions& options) {
  validate_schema(schema);
  const Rows rows = read_rows(in, schema, /*with_choice=*/true);
  Assembled a = assemble(rows, schema, /*with_choice=*/true);
  ValidationOptions v;
  v.alternatives_per_task = options.alternatives_per_task;
  return PanelDataset(schema, std::move(a.respondents), std::move(a.trait_names), v);
}

PanelDataset load_dataset(const std::filesystem::path& path, const Schema& schema,
                          const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  return read_dataset(in, schema, options);
}

void write_dataset(std::ostream& out, const PanelDataset& dataset) {
  write_long(out, dataset.schema(), dataset.respondents(), dataset.trait_names(), true);
}

void save_dataset(const std::filesystem::path& path, const PanelDataset& dataset) {
  std::ostringstream out;
  write_dataset(out, dataset);
  write_file_atomic(path, out.str());
}

void write_skeleton(std::ostream& out, const Schema& schema,
                    const std::vector<Respondent>& respondents) {
  write_long(out, schema, respondents, {}, false);
}

std::vector<Respondent> read_skeleton(std::istream& in, const Schema& schema,
                                      const LoadOptions& options) {
  validate_schema(schema);
  const Rows rows = read_rows(in, schema, /*with_choice=*/false);
  Assembled a = assemble(rows, schema, /*with_choice=*/false);
  ValidationOptions v;
  v.alternatives_per_task = options.alternatives_per_task;
  v.require_choices = false;
  validate_respondents(schema, a.respondents, a.trait_names, v);
  return std::move(a.respondents);
}

// ---------------------------------------------------------------------------
// Descriptive summary

DatasetSummary summarize(const PanelDataset& dataset) {
  if (dataset.n_respondents() == 0 || dataset.n_task_observations() == 0)
    throw Error(ErrorCode::EmptyDataset, "cannot summarize an empty dataset");

  DatasetSummary s;
  s.n_respondents = dataset.n_respondents();
  s.n_task_observations = dataset.n_task_observations();
  const Schema& schema = dataset.schema();

  std::map<std::string, std::vector<double>> numeric;
  std::map<std::string, std::map<std::string, std::size_t>> text;
  std::map<std::string, std::size_t> text_totals;
  for (const auto& r : dataset.respondents()) {
    for (const auto& [name, value] : r.traits) {
      if (const double* d = std::get_if<double>(&value)) {
        numeric[name].push_back(*d);
      } else {
        ++text[name][std::get<std::string>(value)];
        ++text_totals[name];
      }
    }
  }
  for (const auto& [name, values] : numeric) {
    TraitSummary t;
    t.count = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    t.mean = sum / static_cast<double>(t.count);
    if (t.count > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - t.mean) * (v - t.mean);
      t.sd = std::sqrt(ss / static_cast<double>(t.count - 1));
    }
    s.numeric_traits[name] = t;
  }
  for (const auto& [name, counts] : text)
    for (const auto& [value, count] : counts)
      s.categorical_traits[name][value] =
          static_cast<double>(count) / static_cast<double>(text_totals[name]);

  std::vector<std::vector<std::size_t>> level_counts(schema.size());
  for (std::size_t k = 0; k < schema.size(); ++k) level_counts[k].assign(schema[k].levels.size(), 0);
  std::map<Outlet, std::vector<double>> outlet_sums;
  std::map<Outlet, std::size_t> chosen;
  std::size_t presented = 0;

  for (const auto& r : dataset.respondents()) {
    for (const auto& t : r.tasks) {
      if (t.chosen) ++chosen[t.alternatives[*t.chosen].outlet];
      for (const auto& a : t.alternatives) {
        if (a.is_opt_out()) continue;
        ++presented;
        ++s.outlet_counts[a.outlet];
        auto& sums = outlet_sums[a.outlet];
        sums.resize(schema.size(), 0.0);
        for (std::size_t k = 0; k < schema.size(); ++k) {
          sums[k] += a.values[k];
          if (schema[k].is_discrete()) ++level_counts[k][static_cast<std::size_t>(a.values[k])];
        }
      }
    }
  }
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (!schema[k].is_discrete() || presented == 0) continue;
    for (std::size_t l = 0; l < schema[k].levels.size(); ++l)
      s.level_shares[schema[k].name][schema[k].levels[l]] =
          static_cast<double>(level_counts[k][l]) / static_cast<double>(presented);
  }
  for (const auto& [outlet, sums] : outlet_sums) {
    const auto n = static_cast<double>(s.outlet_counts[outlet]);
    for (std::size_t k = 0; k < schema.size(); ++k) s.outlet_means[outlet][schema[k].name] = sums[k] / n;
  }
  for (const auto& [outlet, count] : chosen)
    s.chosen_shares[outlet] =
        static_cast<double>(count) / static_cast<double>(s.n_task_observations);
  return s;
}

}  // namespace dce
