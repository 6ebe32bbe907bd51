#include "dcekit/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "json.hpp"

#include "csv.hpp"
#include "dcekit/error.hpp"

namespace dce {

using Json = nlohmann::ordered_json;

namespace {

Json parse(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

void allow_keys(const Json& j, std::initializer_list<std::string_view> keys, std::string_view where) {
  if (!j.is_object()) bad(std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto k : keys) known = known || key == k;
    if (!known) bad("unknown key '" + key + "' in " + std::string(where));
  }
}

std::string get_string(const Json& j, std::string_view where) {
  if (!j.is_string()) bad(std::string(where) + " must be a string");
  return j.get<std::string>();
}

double get_number(const Json& j, std::string_view where) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) bad(std::string(where) + " must be a number");
  return j.get<double>();
}

std::uint64_t get_count(const Json& j, std::string_view where) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0))
    bad(std::string(where) + " must be a non-negative integer");
  return j.get<std::uint64_t>();
}

Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

Json embed_manifest(std::string_view manifest_json) {
  if (manifest_json.empty()) return nullptr;
  return parse(manifest_json, "manifest");
}

Json schema_json(const Schema& schema) {
  Json out = Json::array();
  for (const auto& a : schema) {
    Json j;
    j["name"] = a.name;
    j["kind"] = std::string(to_string(a.kind));
    if (a.is_discrete()) j["levels"] = a.levels;
    if (!a.unit.empty()) j["unit"] = a.unit;
    out.push_back(std::move(j));
  }
  return out;
}

Schema schema_from(const Json& root) {
  const Json& list = root.is_object() && root.contains("attributes") ? root.at("attributes") : root;
  if (!list.is_array()) bad("schema must be an array of attributes");
  Schema schema;
  for (const auto& j : list) {
    allow_keys(j, {"name", "kind", "levels", "unit"}, "schema attribute");
    AttributeDef a;
    if (!j.contains("name")) bad("schema attribute without a name");
    a.name = get_string(j["name"], "attribute name");
    if (j.contains("kind")) a.kind = parse_attribute_kind(get_string(j["kind"], "attribute kind"));
    if (j.contains("levels")) {
      if (!j["levels"].is_array()) bad("levels of '" + a.name + "' must be an array");
      for (const auto& l : j["levels"]) a.levels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
    }
    if (j.contains("unit")) a.unit = get_string(j["unit"], "attribute unit");
    schema.push_back(std::move(a));
  }
  validate_schema(schema);
  return schema;
}

std::vector<Outlet> outlets_from(const Json& j, std::string_view where) {
  if (!j.is_array()) bad(std::string(where) + " must be an array of outlet labels");
  std::vector<Outlet> out;
  for (const auto& o : j) out.push_back(parse_outlet(get_string(o, where)));
  return out;
}

Json outlets_json(const std::vector<Outlet>& outlets) {
  Json out = Json::array();
  for (Outlet o : outlets) out.push_back(std::string(to_string(o)));
  return out;
}

Json model_spec_json(const ModelSpec& spec) {
  Json j;
  j["population"] = std::string(to_string(spec.population));
  j["outlet_intercepts"] = outlets_json(spec.outlet_intercepts);
  j["price_attr"] = spec.price_attr;
  j["travel_time_attr"] = spec.travel_time_attr;
  j["travel_time_mode"] = std::string(to_string(spec.travel_time_mode));
  j["travel_time_outlets"] = outlets_json(spec.travel_time_outlets);
  Json extras = Json::array();
  for (const auto& e : spec.extra_attrs) extras.push_back({{"name", e.name}, {"coding", std::string(to_string(e.coding))}});
  j["extra_attrs"] = std::move(extras);
  return j;
}

ModelSpec model_spec_from(const Json& j) {
  allow_keys(j,
             {"population", "outlet_intercepts", "price_attr", "travel_time_attr", "travel_time_mode",
              "travel_time_outlets", "extra_attrs"},
             "model spec");
  ModelSpec spec;
  if (j.contains("population")) spec.population = parse_population(get_string(j["population"], "population"));
  if (j.contains("outlet_intercepts")) spec.outlet_intercepts = outlets_from(j["outlet_intercepts"], "outlet_intercepts");
  if (j.contains("price_attr")) spec.price_attr = get_string(j["price_attr"], "price_attr");
  if (j.contains("travel_time_attr")) spec.travel_time_attr = get_string(j["travel_time_attr"], "travel_time_attr");
  if (j.contains("travel_time_mode"))
    spec.travel_time_mode = parse_travel_time_mode(get_string(j["travel_time_mode"], "travel_time_mode"));
  if (j.contains("travel_time_outlets"))
    spec.travel_time_outlets = outlets_from(j["travel_time_outlets"], "travel_time_outlets");
  if (j.contains("extra_attrs")) {
    if (!j["extra_attrs"].is_array()) bad("extra_attrs must be an array");
    for (const auto& e : j["extra_attrs"]) {
      ExtraAttribute x;
      if (e.is_string()) {
        x.name = e.get<std::string>();
      } else {
        allow_keys(e, {"name", "coding"}, "extra attribute");
        if (!e.contains("name")) bad("extra attribute without a name");
        x.name = get_string(e["name"], "extra attribute name");
        if (e.contains("coding")) x.coding = parse_coding(get_string(e["coding"], "coding"));
      }
      spec.extra_attrs.push_back(std::move(x));
    }
  }
  return spec;
}

Json coefficient_row(const std::string& name, double estimate, double se) {
  Json row;
  row["name"] = name;
  row["estimate"] = number(estimate);
  row["se"] = number(se);
  const double z = se > 0 ? estimate / se : std::numeric_limits<double>::quiet_NaN();
  row["z"] = number(z);
  row["p"] = number(std::isfinite(z) ? two_sided_p(z) : std::numeric_limits<double>::quiet_NaN());
  return row;
}

Json line_json(const PotentialLine& line, const std::string& model) {
  Json j;
  j["side"] = std::string(to_string(line.side));
  j["model"] = model;
  j["intercept"] = number(line.intercept);
  j["slope"] = number(line.slope);
  j["mean_travel_time"] = number(line.mean_travel_time);
  j["value_at_mean"] = number(line.at_mean());
  j["intercept_formula"] = line.intercept_formula;
  j["slope_formula"] = line.slope_formula;
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace

Schema schema_from_json(std::string_view json) { return schema_from(parse(json, "schema")); }

std::string schema_to_json(const Schema& schema) { return dump(schema_json(schema)); }

ModelSpec model_spec_from_json(std::string_view json) { return model_spec_from(parse(json, "model spec")); }

std::string model_spec_to_json(const ModelSpec& spec) { return dump(model_spec_json(spec)); }

DesignConfig design_config_from_json(std::string_view json, DesignConfig base) {
  const Json j = parse(json, "design config");
  allow_keys(j, {"n_tasks", "n_alts", "seed", "outlets", "grids", "fixed_values"}, "design config");
  DesignConfig c = std::move(base);
  const Schema& schema = c.schema;
  if (j.contains("n_tasks")) c.n_tasks = get_count(j["n_tasks"], "n_tasks");
  if (j.contains("n_alts")) c.n_alts = get_count(j["n_alts"], "n_alts");
  if (j.contains("seed")) c.seed = get_count(j["seed"], "seed");
  if (j.contains("outlets")) c.outlets = outlets_from(j["outlets"], "outlets");
  if (j.contains("grids")) {
    if (!j["grids"].is_object()) bad("grids must map attribute names to value lists");
    for (const auto& [name, values] : j["grids"].items()) {
      if (!values.is_array()) bad("grid for '" + name + "' must be an array");
      auto& grid = c.grids[name];
      grid.clear();
      for (const auto& v : values) grid.push_back(get_number(v, "grid value"));
    }
  }
  if (j.contains("fixed_values")) {
    if (!j["fixed_values"].is_object()) bad("fixed_values must map outlets to attribute values");
    for (const auto& [outlet, values] : j["fixed_values"].items()) {
      if (!values.is_object()) bad("fixed_values for '" + outlet + "' must be an object");
      auto& out = c.fixed_values[parse_outlet(outlet)];
      for (const auto& [name, v] : values.items()) {
        auto k = find_attribute(schema, name);
        if (k && schema[*k].is_discrete() && v.is_string()) {
          const auto& levels = schema[*k].levels;
          auto it = std::find(levels.begin(), levels.end(), v.get<std::string>());
          if (it == levels.end()) bad("unknown level '" + v.get<std::string>() + "' for '" + name + "'");
          out[name] = static_cast<double>(it - levels.begin());
        } else {
          out[name] = get_number(v, "fixed value");
        }
      }
    }
  }
  validate_design_config(c);
  return c;
}

TrueParams true_params_from_json(std::string_view json) {
  const Json j = parse(json, "truth");
  allow_keys(j, {"fixed", "random"}, "truth");
  TrueParams t;
  if (j.contains("fixed")) {
    if (!j["fixed"].is_object()) throw Error(ErrorCode::InvalidTruth, "'fixed' must be an object");
    for (const auto& [name, v] : j["fixed"].items()) {
      if (!v.is_number()) throw Error(ErrorCode::InvalidTruth, "value of '" + name + "' must be a number");
      t.fixed[name] = v.get<double>();
    }
  }
  if (j.contains("random")) {
    if (!j["random"].is_object()) throw Error(ErrorCode::InvalidTruth, "'random' must be an object");
    for (const auto& [name, v] : j["random"].items()) {
      if (!v.is_object() || !v.contains("mean") || !v.contains("sd") || !v["mean"].is_number() ||
          !v["sd"].is_number())
        throw Error(ErrorCode::InvalidTruth, "random '" + name + "' needs numeric mean and sd");
      t.random[name] = {v["mean"].get<double>(), v["sd"].get<double>()};
    }
  }
  return t;
}

std::string true_params_to_json(const TrueParams& truth) {
  Json j;
  j["fixed"] = Json::object();
  for (const auto& [name, v] : truth.fixed) j["fixed"][name] = v;
  j["random"] = Json::object();
  for (const auto& [name, law] : truth.random) j["random"][name] = {{"mean", law.mean}, {"sd", law.sd}};
  return dump(j);
}

AttributeMeans attribute_means_from_json(std::string_view json) {
  const Json j = parse(json, "attribute means");
  if (!j.is_object()) bad("attribute means must be an object keyed by outlet");
  AttributeMeans out;
  for (const auto& [outlet, v] : j.items()) {
    allow_keys(v, {"travel_time", "covariates"}, "outlet means");
    OutletMeans m;
    if (!v.contains("travel_time")) throw Error(ErrorCode::MissingMeans, "no travel_time mean for '" + outlet + "'");
    m.travel_time = get_number(v["travel_time"], "travel_time");
    if (!(m.travel_time >= 0.0)) bad("mean travel time of '" + outlet + "' must be >= 0");
    if (v.contains("covariates")) {
      if (!v["covariates"].is_object()) bad("covariates must be an object");
      for (const auto& [name, x] : v["covariates"].items()) m.covariates[name] = get_number(x, "covariate mean");
    }
    out[parse_outlet(outlet)] = std::move(m);
  }
  return out;
}

std::string attribute_means_to_json(const AttributeMeans& means) {
  Json j = Json::object();
  for (const auto& [outlet, m] : means) {
    Json o;
    o["travel_time"] = number(m.travel_time);
    o["covariates"] = Json::object();
    for (const auto& [name, x] : m.covariates) o["covariates"][name] = number(x);
    j[std::string(to_string(outlet))] = std::move(o);
  }
  return dump(j);
}

std::string fit_to_json(const FitResult& fit, std::string_view manifest_json) {
  const Eigen::VectorXd se = fit.standard_errors();
  Json j;
  j["model"] = fit.model;
  Json coefficients = Json::array();
  Json sds = Json::array();
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    const std::string& name = fit.names[i];
    if (name.rfind("sd:", 0) == 0)
      sds.push_back(coefficient_row(name.substr(3), fit.estimates[e], se[e]));
    else
      coefficients.push_back(coefficient_row(name, fit.estimates[e], se[e]));
  }
  j["coefficients"] = std::move(coefficients);
  if (fit.model == "mixl") j["sd"] = std::move(sds);
  j["statistics"] = {{"loglik", number(fit.loglik)},   {"loglik_null", number(fit.loglik_null)},
                     {"n_obs", fit.n_obs},             {"n_respondents", fit.n_respondents},
                     {"k", fit.k},                     {"aic", number(fit.aic)},
                     {"bic", number(fit.bic)},         {"adj_rho2", number(fit.adj_rho2)}};
  j["convergence"] = {{"converged", fit.converged},
                      {"iterations", fit.iterations},
                      {"grad_max_norm", number(fit.grad_max_norm)},
                      {"warnings", fit.warnings}};
  if (fit.model == "mixl") {
    j["random_coefficients"] = fit.random_coefficients;
    if (fit.draws)
      j["draws"] = {{"scheme", fit.draws->scheme}, {"n_draws", fit.draws->n_draws}, {"seed", fit.draws->seed}};
  }
  j["spec"] = model_spec_json(fit.spec);
  j["covariance_method"] = fit.covariance_method;
  j["names"] = fit.names;
  Json cov = Json::array();
  for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) row.push_back(number(fit.covariance(r, c)));
    cov.push_back(std::move(row));
  }
  j["covariance"] = std::move(cov);
  if (!manifest_json.empty()) j["manifest"] = embed_manifest(manifest_json);
  return dump(j);
}

FitResult fit_from_json(std::string_view json) {
  const Json j = parse(json, "fit");
  try {
    FitResult fit;
    fit.model = j.at("model").get<std::string>();
    fit.spec = model_spec_from(j.at("spec"));
    fit.names = j.at("names").get<std::vector<std::string>>();
    const auto k = static_cast<Eigen::Index>(fit.names.size());
    std::map<std::string, double> values;
    for (const auto& row : j.at("coefficients")) values[row.at("name").get<std::string>()] = get_number(row.at("estimate"), "estimate");
    if (j.contains("sd"))
      for (const auto& row : j.at("sd")) values["sd:" + row.at("name").get<std::string>()] = get_number(row.at("estimate"), "estimate");
    fit.estimates.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      auto it = values.find(fit.names[static_cast<std::size_t>(i)]);
      if (it == values.end()) bad("fit JSON lacks an estimate for '" + fit.names[static_cast<std::size_t>(i)] + "'");
      fit.estimates[i] = it->second;
    }
    const Json& cov = j.at("covariance");
    if (static_cast<Eigen::Index>(cov.size()) != k) bad("covariance has the wrong size");
    fit.covariance.resize(k, k);
    for (Eigen::Index r = 0; r < k; ++r) {
      if (static_cast<Eigen::Index>(cov[r].size()) != k) bad("covariance has the wrong size");
      for (Eigen::Index c = 0; c < k; ++c) fit.covariance(r, c) = get_number(cov[r][c], "covariance");
    }
    fit.covariance_method = j.at("covariance_method").get<std::string>();
    const Json& s = j.at("statistics");
    fit.loglik = get_number(s.at("loglik"), "loglik");
    fit.loglik_null = get_number(s.at("loglik_null"), "loglik_null");
    fit.n_obs = s.at("n_obs").get<std::size_t>();
    fit.n_respondents = s.at("n_respondents").get<std::size_t>();
    fit.k = s.at("k").get<std::size_t>();
    fit.aic = get_number(s.at("aic"), "aic");
    fit.bic = get_number(s.at("bic"), "bic");
    fit.adj_rho2 = get_number(s.at("adj_rho2"), "adj_rho2");
    const Json& c = j.at("convergence");
    fit.converged = c.at("converged").get<bool>();
    fit.iterations = c.at("iterations").get<int>();
    fit.grad_max_norm = get_number(c.at("grad_max_norm"), "grad_max_norm");
    fit.warnings = c.at("warnings").get<std::vector<std::string>>();
    if (j.contains("random_coefficients")) fit.random_coefficients = j["random_coefficients"].get<std::vector<std::string>>();
    if (j.contains("draws")) {
      const Json& d = j["draws"];
      fit.draws = DrawInfo{d.at("scheme").get<std::string>(), d.at("n_draws").get<std::size_t>(),
                           d.at("seed").get<std::uint64_t>()};
    }
    return fit;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("fit JSON: ") + e.what());
  }
}

std::string welfare_to_json(const WelfareTable& table, std::string_view manifest_json) {
  Json j;
  j["population"] = std::string(to_string(table.population));
  j["direction"] = std::string(to_string(table.direction));
  j["model"] = table.model;
  j["price_coefficient"] = table.price_coefficient;
  j["price_coefficient_used"] = number(table.price_coefficient_used);
  Json entries = Json::array();
  for (const auto& e : table.entries)
    entries.push_back({{"coefficient", e.coefficient},
                       {"estimate", number(e.estimate)},
                       {"se", number(e.se)},
                       {"method", e.method},
                       {"formula", e.formula},
                       {"reading", e.reading}});
  j["entries"] = std::move(entries);
  if (!manifest_json.empty()) j["manifest"] = embed_manifest(manifest_json);
  return dump(j);
}

std::string welfare_to_csv(const WelfareTable& table) {
  std::ostringstream out;
  csv::Writer w(out);
  w.row({"coefficient", "estimate", "se", "method", "formula", "reading"});
  for (const auto& e : table.entries)
    w.row({e.coefficient, format_double(e.estimate), format_double(e.se), e.method, e.formula, e.reading});
  return out.str();
}

std::string curve_to_csv(const std::vector<CurveRow>& rows) {
  std::ostringstream out;
  csv::Writer w(out);
  w.row({"T", "capg", "cavg", "delta"});
  for (const auto& r : rows)
    w.row({format_double(r.travel_time), format_double(r.capg), format_double(r.cavg), format_double(r.delta)});
  return out.str();
}

std::string potential_to_json(const std::vector<PotentialReport>& reports, std::string_view manifest_json) {
  Json j;
  Json list = Json::array();
  for (const auto& r : reports) {
    Json o;
    o["outlet"] = std::string(to_string(r.consumer.outlet));
    o["subgroup"] = r.subgroup;
    o["consumer"] = line_json(r.consumer, r.consumer_model);
    o["farmer"] = line_json(r.farmer, r.farmer_model);
    o["break_even"] = {{"status", std::string(to_string(r.break_even.status))},
                       {"time", number(r.break_even.time)},
                       {"price", number(r.break_even.price)},
                       {"window_beyond_range", r.break_even.window_beyond_range}};
    Json curve = Json::array();
    for (const auto& row : r.rows)
      curve.push_back({{"T", row.travel_time}, {"capg", number(row.capg)}, {"cavg", number(row.cavg)},
                       {"delta", number(row.delta)}});
    o["curve"] = std::move(curve);
    list.push_back(std::move(o));
  }
  j["outlets"] = std::move(list);
  if (!manifest_json.empty()) j["manifest"] = embed_manifest(manifest_json);
  return dump(j);
}

std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buffer, ptr);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorCode::Io, "write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::Io, "cannot move output into '" + path.string() + "'");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::Io, "cannot read '" + path.string() + "'");
  return buffer.str();
}

}  // namespace dce
