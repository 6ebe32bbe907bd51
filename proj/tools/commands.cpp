#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "dcekit/dcekit.hpp"

namespace dce::cli {
namespace {

// Left-aligns UTF-8 text in a column of `width` characters.
std::string padded(const std::string& text, std::size_t width) {
  std::size_t chars = 0;
  for (unsigned char c : text) chars += (c & 0xC0) != 0x80;
  return text + std::string(chars < width ? width - chars : 0, ' ');
}

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::string_view kVersion = DCEKIT_VERSION;

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

std::string str(const Json& sec, const char* key, std::string fallback) {
  if (!sec.contains(key)) return fallback;
  if (!sec[key].is_string()) bad(std::string("'") + key + "' must be a string");
  return sec[key].get<std::string>();
}

double num(const Json& sec, const char* key, double fallback) {
  if (!sec.contains(key)) return fallback;
  if (!sec[key].is_number()) bad(std::string("'") + key + "' must be a number");
  return sec[key].get<double>();
}

std::uint64_t count(const Json& sec, const char* key, std::uint64_t fallback) {
  if (!sec.contains(key)) return fallback;
  const Json& v = sec[key];
  if (!v.is_number_unsigned()) bad(std::string("'") + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

bool flag(const Json& sec, const char* key, bool fallback) {
  if (!sec.contains(key)) return fallback;
  if (!sec[key].is_boolean()) bad(std::string("'") + key + "' must be true or false");
  return sec[key].get<bool>();
}

/// Config state, input digests and the manifest of one command run.
class Context {
 public:
  explicit Context(const Invocation& inv) : inv_(inv) {
    if (inv.config) {
      const std::string text = read_file(*inv.config);
      config_ = parse_json(text, "config");
      if (!config_.is_object()) bad("config must be a JSON object");
      base_dir_ = inv.config->parent_path();
      manifest_["config"] = {{"path", inv.config->string()}, {"sha256", sha256_hex(text)}};
    } else {
      config_ = Json::object();
    }
    parameters_ = Json::object();
  }

  const Invocation& inv() const { return inv_; }
  const Json& config() const { return config_; }

  const Json& section(const char* name) const {
    static const Json empty = Json::object();
    if (!config_.contains(name)) return empty;
    if (!config_[name].is_object()) bad(std::string("config section '") + name + "' must be an object");
    return config_[name];
  }

  /// Path from a flag (relative to the working directory) or a config key
  /// (relative to the config file).
  struct PathArg {
    std::string given;
    fs::path path;
  };

  PathArg path(const std::optional<std::string>& from_flag, const Json& sec, const char* key,
               std::string_view what) const {
    if (from_flag) return {*from_flag, fs::path(*from_flag)};
    if (!sec.contains(key)) bad("missing " + std::string(what) + " ('" + key + "' in the config)");
    const std::string given = str(sec, key, "");
    fs::path p(given);
    if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
    return {given, p};
  }

  std::optional<PathArg> optional_path(const std::optional<std::string>& from_flag, const Json& sec,
                                       const char* key) const {
    if (!from_flag && !sec.contains(key)) return std::nullopt;
    return path(from_flag, sec, key, key);
  }

  PathArg output(const Json& sec) const { return writable(path(inv_.out, sec, "out", "output path (--out)")); }

  /// Refuses output paths that would overwrite the run configuration.
  PathArg writable(PathArg p) const {
    std::error_code ec;
    if (inv_.config && fs::equivalent(p.path, *inv_.config, ec))
      bad("output '" + p.given + "' would overwrite the config file");
    return p;
  }

  std::string read_input(const PathArg& p) {
    std::string text = read_file(p.path);
    inputs_.push_back({{"path", p.given}, {"sha256", sha256_hex(text)}});
    return text;
  }

  /// JSON given inline or as a path to a JSON file.
  Json inline_or_file(const Json& value, std::string_view what) {
    if (value.is_object()) return value;
    if (value.is_string()) {
      fs::path p(value.get<std::string>());
      if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
      Json j = parse_json(read_input({value.get<std::string>(), p}), what);
      if (j.is_object()) j.erase("manifest");
      return j;
    }
    bad(std::string(what) + " must be an object or a file path");
  }

  std::uint64_t seed(const Json& sec) {
    std::optional<std::uint64_t> s = inv_.seed;
    if (!s && sec.contains("seed")) s = count(sec, "seed", 0);
    if (!s && config_.contains("seed")) s = count(config_, "seed", 0);
    if (!s) bad("command '" + inv_.command + "' is stochastic and needs an explicit seed (--seed or \"seed\")");
    manifest_["seed"] = *s;
    return *s;
  }

  Population population() const {
    if (!config_.contains("population")) bad("config needs a 'population' (consumer or farmer)");
    return parse_population(str(config_, "population", ""));
  }

  Schema schema() const {
    if (config_.contains("schema")) return schema_from_json(config_["schema"].dump());
    return population() == Population::Consumer ? consumer_design_preset(0).schema
                                                : farmer_design_preset(0).schema;
  }

  ModelSpec model() const {
    const Population pop = population();
    if (!config_.contains("model"))
      return pop == Population::Consumer ? consumer_model_preset() : farmer_model_preset();
    ModelSpec spec = model_spec_from_json(config_["model"].dump());
    if (!config_["model"].contains("population")) spec.population = pop;
    return spec;
  }

  LoadOptions load_options() const {
    LoadOptions o;
    o.alternatives_per_task = count(config_, "alternatives_per_task", 6);
    return o;
  }

  Json& parameters() { return parameters_; }

  std::string manifest() const {
    Json m;
    m["tool"] = "dcekit";
    m["version"] = std::string(kVersion);
    m["command"] = inv_.command;
    for (const auto& [k, v] : manifest_.items()) m[k] = v;
    m["parameters"] = parameters_;
    m["inputs"] = inputs_;
    return m.dump();
  }

  std::string csv_manifest() const { return "# dcekit manifest " + manifest() + "\n"; }

 private:
  const Invocation& inv_;
  Json config_;
  fs::path base_dir_;
  Json manifest_ = Json::object();
  Json parameters_;
  Json inputs_ = Json::array();
};

DesignConfig design_config(Context& ctx, const Json& sec, std::uint64_t seed) {
  const Population pop = ctx.population();
  DesignConfig base;
  if (ctx.config().contains("schema")) {
    base.schema = ctx.schema();
    base.population = pop;
  } else {
    base = pop == Population::Consumer ? consumer_design_preset(seed) : farmer_design_preset(seed);
  }
  Json keys = sec;
  for (const char* k : {"n_respondents", "out", "seed"}) keys.erase(k);
  DesignConfig cfg = design_config_from_json(keys.dump(), std::move(base));
  cfg.seed = seed;
  return cfg;
}

std::string ratio_text(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

void print_fit(std::ostream& out, const FitResult& fit) {
  out << fit.model << " fit: loglik " << ratio_text(fit.loglik) << ", k " << fit.k << ", n_obs "
      << fit.n_obs << ", AIC " << ratio_text(fit.aic) << ", BIC " << ratio_text(fit.bic)
      << ", adj. rho2 " << ratio_text(fit.adj_rho2) << (fit.converged ? "" : " (NOT CONVERGED)") << "\n";
  const Eigen::VectorXd se = fit.standard_errors();
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    out << "  " << padded(fit.names[i], 28) << std::setw(12)
        << ratio_text(fit.estimates[e]) << std::setw(12) << ratio_text(se[e]) << "\n";
  }
  for (const auto& w : fit.warnings) out << "  warning: " << w << "\n";
}

PanelDataset load_data(Context& ctx, const Json& sec, std::optional<std::string>* subgroup_used) {
  const auto p = ctx.path(ctx.inv().data, sec, "data", "dataset (--data)");
  std::istringstream in(ctx.read_input(p));
  PanelDataset dataset = read_dataset(in, ctx.schema(), ctx.load_options());
  std::optional<std::string> subgroup = ctx.inv().subgroup;
  if (!subgroup && sec.contains("subgroup")) subgroup = str(sec, "subgroup", "");
  if (subgroup) {
    dataset = filter_subgroup(dataset, subgroup_from_string(*subgroup, ctx.population()));
    ctx.parameters()["subgroup"] = *subgroup;
    if (dataset.n_respondents() == 0) throw Error(ErrorCode::EmptyDataset, "subgroup '" + *subgroup + "' is empty");
  }
  if (subgroup_used) *subgroup_used = subgroup;
  return dataset;
}

FitResult run_fit(Context& ctx, const Json& sec, const PanelDataset& dataset, const std::string& kind) {
  const unsigned threads = ctx.inv().threads;
  Json& params = ctx.parameters();
  params["model"] = kind;
  const ModelSpec spec = ctx.model();
  if (kind == "mnl") {
    FitOptions o;
    o.tol = num(sec, "tol", o.tol);
    o.max_iter = static_cast<int>(count(sec, "max_iter", static_cast<std::uint64_t>(o.max_iter)));
    o.robust = flag(sec, "robust", false);
    o.threads = threads;
    params["tol"] = o.tol;
    params["max_iter"] = o.max_iter;
    params["robust"] = o.robust;
    return fit_mnl(dataset, CompiledSpec(spec, dataset.schema()), o);
  }
  if (kind != "mixl") bad("unknown model '" + kind + "' (expected mnl or mixl)");
  MixlSpec m;
  m.base = spec;
  if (sec.contains("random_set")) {
    if (!sec["random_set"].is_array()) bad("'random_set' must be an array of coefficient names");
    m.random_set = sec["random_set"].get<std::vector<std::string>>();
  } else {
    m.random_set = default_random_set(CompiledSpec(spec, dataset.schema()));
  }
  m.n_draws = ctx.inv().draws ? *ctx.inv().draws : count(sec, "draws", m.n_draws);
  m.draw_scheme = parse_draw_scheme(str(sec, "draw_scheme", "sobol"));
  m.seed = ctx.seed(sec);
  MixlOptions o;
  o.tol = num(sec, "tol", o.tol);
  o.max_iter = static_cast<int>(count(sec, "max_iter", static_cast<std::uint64_t>(o.max_iter)));
  const std::string cov = str(sec, "covariance", "sandwich");
  if (cov == "sandwich") o.covariance = MixlCovariance::Sandwich;
  else if (cov == "opg") o.covariance = MixlCovariance::Opg;
  else if (cov == "hessian") o.covariance = MixlCovariance::Hessian;
  else bad("unknown covariance '" + cov + "' (expected sandwich, opg or hessian)");
  o.threads = threads;
  params["random_set"] = m.random_set;
  params["draws"] = m.n_draws;
  params["draw_scheme"] = std::string(to_string(m.draw_scheme));
  params["tol"] = o.tol;
  params["max_iter"] = o.max_iter;
  params["covariance"] = cov;
  return fit_mixl(dataset, m, o).fit;
}

void not_converged(const FitResult& fit) {
  std::string why = "fit did not converge";
  if (!fit.warnings.empty()) why += ": " + fit.warnings.front();
  throw Error(ErrorCode::NotConverged, why);
}

int cmd_design(Context& ctx, std::ostream& out) {
  const Json& sec = ctx.section("design");
  const std::uint64_t seed = ctx.seed(sec);
  const std::size_t n = count(sec, "n_respondents", 0);
  if (n == 0) bad("design needs 'n_respondents' >= 1");
  const DesignConfig cfg = design_config(ctx, sec, seed);
  Json p = sec;
  p.erase("out");
  p["seed"] = seed;
  ctx.parameters() = p;
  const Design design = generate_design(cfg, n, ctx.inv().threads);
  std::ostringstream text;
  text << ctx.csv_manifest();
  write_skeleton(text, design.schema, design.respondents);
  const auto o = ctx.output(sec);
  write_file_atomic(o.path, text.str());
  out << "design: " << n << " respondents x " << cfg.n_tasks << " tasks x " << cfg.n_alts
      << " alternatives -> " << o.given << "\n";
  return kExitOk;
}

int cmd_simulate(Context& ctx, std::ostream& out) {
  const Json& sec = ctx.section("simulate");
  const std::uint64_t seed = ctx.seed(sec);
  const Schema schema = ctx.schema();
  const auto dp = ctx.path(ctx.inv().data, sec, "design", "design skeleton (--data)");
  std::istringstream in(ctx.read_input(dp));
  Design design;
  design.schema = schema;
  design.population = ctx.population();
  design.respondents = read_skeleton(in, schema, ctx.load_options());
  const Json* truth_json = sec.contains("truth") ? &sec["truth"] : ctx.config().contains("truth") ? &ctx.config()["truth"] : nullptr;
  if (!truth_json) bad("simulate needs a 'truth' (inline object or file path)");
  const Json truth = ctx.inline_or_file(*truth_json, "truth");
  const TrueParams params = true_params_from_json(truth.dump());
  ctx.parameters() = {{"seed", seed}, {"truth", truth}, {"model", Json::parse(model_spec_to_json(ctx.model()))}};
  const CompiledSpec spec(ctx.model(), schema);
  const PanelDataset data = simulate_choices(design, params, spec, seed, ctx.inv().threads);
  std::ostringstream text;
  text << ctx.csv_manifest();
  write_dataset(text, data);
  const auto o = ctx.output(sec);
  write_file_atomic(o.path, text.str());
  out << "simulate: " << data.n_task_observations() << " choices from " << data.n_respondents()
      << " respondents -> " << o.given << "\n";
  return kExitOk;
}

int cmd_fit(Context& ctx, std::ostream& out) {
  const Json& sec = ctx.section("fit");
  const std::string kind = ctx.inv().model ? *ctx.inv().model : str(sec, "model", "mnl");
  const PanelDataset dataset = load_data(ctx, sec, nullptr);
  const FitResult fit = run_fit(ctx, sec, dataset, kind);
  const auto o = ctx.output(sec);
  write_file_atomic(o.path, fit_to_json(fit, ctx.manifest()));
  print_fit(out, fit);
  out << "fit -> " << o.given << "\n";
  if (!fit.converged) not_converged(fit);
  return kExitOk;
}

int cmd_wtp(Context& ctx, std::ostream& out) {
  const Json& sec = ctx.section("wtp");
  const auto fp = ctx.path(ctx.inv().fit, sec, "fit", "fit JSON (--fit)");
  const FitResult fit = fit_from_json(ctx.read_input(fp));
  std::string dir_text = ctx.inv().direction ? *ctx.inv().direction : str(sec, "direction", "");
  if (dir_text.empty()) dir_text = fit.spec.population == Population::Consumer ? "cap" : "cav";
  const WelfareDirection direction = parse_welfare_direction(dir_text);
  BootstrapOptions boot;
  boot.n_rep = ctx.inv().bootstrap ? *ctx.inv().bootstrap : count(sec, "bootstrap", 0);
  Json& p = ctx.parameters();
  p["direction"] = std::string(to_string(direction));
  p["bootstrap"] = boot.n_rep;
  if (boot.n_rep > 0) boot.seed = ctx.seed(sec);
  if (!fit.converged) out << "warning: the input fit did not converge\n";
  const WelfareTable table = welfare_table(fit, direction, boot);
  const auto o = ctx.output(sec);
  const bool json = o.path.extension() == ".json";
  write_file_atomic(o.path, json ? welfare_to_json(table, ctx.manifest()) : ctx.csv_manifest() + welfare_to_csv(table));
  out << to_string(direction) << " table (" << table.entries.size() << " rows, b[" << table.price_coefficient
      << "] = " << ratio_text(table.price_coefficient_used) << ")\n";
  for (const auto& e : table.entries)
    out << "  " << padded(e.coefficient, 28) << std::setw(12)
        << ratio_text(e.estimate) << std::setw(12) << ratio_text(e.se) << "\n";
  out << "wtp -> " << o.given << "\n";
  return kExitOk;
}

std::string outlet_file(const std::string& pattern, Outlet outlet, bool several) {
  const std::string label(to_string(outlet));
  if (auto at = pattern.find("{outlet}"); at != std::string::npos)
    return pattern.substr(0, at) + label + pattern.substr(at + 8);
  if (!several) return pattern;
  const fs::path p(pattern);
  return (p.parent_path() / (p.stem().string() + "_" + label + p.extension().string())).string();
}

int cmd_potential(Context& ctx, std::ostream& out) {
  const Json& sec = ctx.section("potential");
  const FitResult cfit = fit_from_json(ctx.read_input(ctx.path(std::nullopt, sec, "consumer_fit", "consumer fit")));
  const FitResult ffit = fit_from_json(ctx.read_input(ctx.path(std::nullopt, sec, "farmer_fit", "farmer fit")));
  if (!sec.contains("consumer_means") || !sec.contains("farmer_means"))
    throw Error(ErrorCode::MissingMeans, "potential needs 'consumer_means' and 'farmer_means'");
  const AttributeMeans cmeans = attribute_means_from_json(ctx.inline_or_file(sec["consumer_means"], "consumer means").dump());
  const AttributeMeans fmeans = attribute_means_from_json(ctx.inline_or_file(sec["farmer_means"], "farmer means").dump());
  std::vector<Outlet> outlets(kMarketOutlets.begin(), kMarketOutlets.end());
  if (sec.contains("outlets")) {
    outlets.clear();
    for (const auto& o : sec["outlets"]) outlets.push_back(parse_outlet(o.get<std::string>()));
  }
  const double t_max = num(sec, "t_max", kDefaultMaxTravelTime);
  const double step = num(sec, "step", 1.0);
  const std::string subgroup = str(sec, "subgroup", "all");
  Json& p = ctx.parameters();
  p["outlets"] = Json::array();
  for (Outlet o : outlets) p["outlets"].push_back(std::string(to_string(o)));
  p["t_max"] = t_max;
  p["step"] = step;
  p["subgroup"] = subgroup;

  std::vector<PotentialReport> reports;
  for (Outlet outlet : outlets) {
    PotentialReport r;
    r.consumer = capg_line(cfit, outlet, cmeans);
    r.farmer = cavg_line(ffit, outlet, fmeans);
    r.break_even = break_even_time(r.consumer, r.farmer, t_max);
    r.rows = curve_samples(r.consumer, r.farmer, t_max, step);
    r.subgroup = subgroup;
    r.consumer_model = cfit.model;
    r.farmer_model = ffit.model;
    auto affine = [](const PotentialLine& l) {
      return ratio_text(l.intercept) + (l.slope < 0 ? " - " : " + ") + ratio_text(std::fabs(l.slope)) + "*T";
    };
    out << padded(std::string(to_string(outlet)), 14) << " CAPG " << affine(r.consumer) << "  CAVG "
        << affine(r.farmer) << "  " << to_string(r.break_even.status);
    if (r.break_even.status == BreakEvenStatus::Crossing) out << " at T=" << ratio_text(r.break_even.time);
    out << "\n";
    reports.push_back(std::move(r));
  }
  const auto o = ctx.output(sec);
  write_file_atomic(o.path, potential_to_json(reports, ctx.manifest()));
  if (auto c = ctx.optional_path(std::nullopt, sec, "curve_out")) {
    for (const auto& r : reports) {
      const fs::path target = outlet_file(c->path.string(), r.consumer.outlet, reports.size() > 1);
      ctx.writable({target.string(), target});
      write_file_atomic(target, ctx.csv_manifest() + curve_to_csv(r.rows));
    }
  }
  out << "potential -> " << o.given << "\n";
  return kExitOk;
}

int cmd_recover(Context& ctx, std::ostream& out) {
  const Json& sec = ctx.section("recover");
  const std::uint64_t seed = ctx.seed(sec);
  const std::string kind = ctx.inv().model ? *ctx.inv().model : str(sec, "model", "mnl");
  const Json* truth_json = sec.contains("truth") ? &sec["truth"] : ctx.config().contains("truth") ? &ctx.config()["truth"] : nullptr;
  if (!truth_json) bad("recover needs a 'truth' (inline object or file path)");
  const Json truth = ctx.inline_or_file(*truth_json, "truth");
  const TrueParams law = true_params_from_json(truth.dump());
  const Json& dsec = ctx.section("design");
  std::size_t n = count(sec, "n_respondents", count(dsec, "n_respondents", 0));
  if (n == 0) bad("recover needs 'n_respondents' >= 1");
  const DesignConfig cfg = design_config(ctx, dsec, seed);

  const Design design = generate_design(cfg, n, ctx.inv().threads);
  const CompiledSpec spec(ctx.model(), cfg.schema);
  const PanelDataset data = simulate_choices(design, law, spec, seed, ctx.inv().threads);

  Json fsec = sec;
  if (kind == "mixl" && !fsec.contains("random_set")) {
    Json names = Json::array();
    for (const auto& [name, _] : law.random) names.push_back(name);
    fsec["random_set"] = names;
  }
  Json& p = ctx.parameters();
  p["n_respondents"] = n;
  p["truth"] = truth;
  const FitResult fit = run_fit(ctx, fsec, data, kind);

  const Eigen::VectorXd se = fit.standard_errors();
  Json rows = Json::array();
  double worst = 0.0;
  bool passed = fit.converged;
  auto add = [&](const std::string& name, double truth_value) {
    const auto i = static_cast<Eigen::Index>(fit.index_of(name));
    const double z = (fit.estimates[i] - truth_value) / se[i];
    worst = std::max(worst, std::fabs(z));
    if (!(std::fabs(z) <= 3.0)) passed = false;
    rows.push_back({{"name", name}, {"truth", truth_value}, {"estimate", fit.estimates[i]}, {"se", se[i]}, {"z", std::isfinite(z) ? Json(z) : Json(nullptr)}});
    out << "  " << padded(name, 28) << std::setw(10) << ratio_text(truth_value)
        << std::setw(10) << ratio_text(fit.estimates[i]) << std::setw(10) << ratio_text(se[i]) << std::setw(8)
        << ratio_text(z) << "\n";
  };
  out << "recover (" << kind << ", " << n << " respondents): name, truth, estimate, se, z\n";
  const ResolvedTruth resolved = resolve_truth(law, spec);
  for (std::size_t k = 0; k < spec.size(); ++k) add(spec.coefficients()[k].name, resolved.mean[static_cast<Eigen::Index>(k)]);
  if (kind == "mixl")
    for (const auto& name : fit.random_coefficients) {
      auto it = law.random.find(name);
      add("sd:" + name, it == law.random.end() ? 0.0 : it->second.sd);
    }

  Json report;
  report["passed"] = passed;
  report["max_abs_z"] = worst;
  report["converged"] = fit.converged;
  report["loglik"] = fit.loglik;
  report["coefficients"] = std::move(rows);
  report["manifest"] = Json::parse(ctx.manifest());
  const auto o = ctx.output(sec);
  write_file_atomic(o.path, report.dump(2) + "\n");
  out << "recover: max |z| " << ratio_text(worst) << (passed ? " PASS" : " FAIL") << " -> " << o.given << "\n";
  if (!fit.converged) not_converged(fit);
  return passed ? kExitOk : kExitRecoveryFailed;
}

Json shares_json(const std::map<std::string, std::map<std::string, double>>& m) {
  Json j = Json::object();
  for (const auto& [k, inner] : m) {
    j[k] = Json::object();
    for (const auto& [level, v] : inner) j[k][level] = v;
  }
  return j;
}

int cmd_summarize(Context& ctx, std::ostream& out) {
  const Json& sec = ctx.section("summarize");
  const PanelDataset dataset = load_data(ctx, sec, nullptr);
  const DatasetSummary s = summarize(dataset);
  Json j;
  j["n_respondents"] = s.n_respondents;
  j["n_task_observations"] = s.n_task_observations;
  j["numeric_traits"] = Json::object();
  for (const auto& [name, t] : s.numeric_traits)
    j["numeric_traits"][name] = {{"count", t.count}, {"mean", t.mean}, {"sd", t.sd}};
  j["categorical_traits"] = shares_json(s.categorical_traits);
  j["level_shares"] = shares_json(s.level_shares);
  Json outlets = Json::object();
  for (const auto& [o, c] : s.outlet_counts) {
    Json e;
    e["count"] = c;
    e["chosen_share"] = s.chosen_shares.count(o) ? s.chosen_shares.at(o) : 0.0;
    e["means"] = Json::object();
    if (s.outlet_means.count(o))
      for (const auto& [a, v] : s.outlet_means.at(o)) e["means"][a] = v;
    outlets[std::string(to_string(o))] = std::move(e);
  }
  if (s.chosen_shares.count(Outlet::OptOut)) outlets["opt_out"] = {{"chosen_share", s.chosen_shares.at(Outlet::OptOut)}};
  j["outlets"] = std::move(outlets);
  const AttributeMeans means = attribute_means(dataset, CompiledSpec(ctx.model(), dataset.schema()));
  j["attribute_means"] = Json::parse(attribute_means_to_json(means));
  j["manifest"] = Json::parse(ctx.manifest());
  const auto o = ctx.output(sec);
  write_file_atomic(o.path, j.dump(2) + "\n");
  if (auto m = ctx.optional_path(std::nullopt, sec, "means_out")) {
    ctx.writable(*m);
    Json mj = Json::parse(attribute_means_to_json(means));
    mj["manifest"] = Json::parse(ctx.manifest());
    write_file_atomic(m->path, mj.dump(2) + "\n");
  }
  out << "summarize: " << s.n_respondents << " respondents, " << s.n_task_observations << " tasks -> " << o.given
      << "\n";
  return kExitOk;
}

int exit_code(ErrorCode code) {
  switch (classify(code)) {
    case ErrorClass::Validation: return kExitValidation;
    case ErrorClass::Convergence: return kExitNotConverged;
    case ErrorClass::Io: return kExitIo;
  }
  return kExitInternal;
}

void report(std::ostream& err, std::string_view code, std::string_view message, int exit) {
  Json j;
  j["error"] = std::string(code);
  j["message"] = std::string(message);
  j["exit_code"] = exit;
  err << j.dump() << "\n";
}

}  // namespace

int run(const Invocation& invocation, std::ostream& out, std::ostream& err) {
  try {
    Context ctx(invocation);
    const std::string& c = invocation.command;
    if (c == "design") return cmd_design(ctx, out);
    if (c == "simulate") return cmd_simulate(ctx, out);
    if (c == "fit") return cmd_fit(ctx, out);
    if (c == "wtp") return cmd_wtp(ctx, out);
    if (c == "potential") return cmd_potential(ctx, out);
    if (c == "recover") return cmd_recover(ctx, out);
    if (c == "summarize") return cmd_summarize(ctx, out);
    bad("unknown command '" + c + "'");
  } catch (const Error& e) {
    const int code = exit_code(e.code());
    report(err, to_string(e.code()), e.what(), code);
    return code;
  } catch (const Json::exception& e) {
    report(err, "InvalidConfig", e.what(), kExitValidation);
    return kExitValidation;
  } catch (const std::exception& e) {
    report(err, "Internal", e.what(), kExitInternal);
    return kExitInternal;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"dcekit: discrete choice experiment design, estimation and welfare analysis"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Invocation inv;
  std::string config;
  std::uint64_t seed = 0;
  std::size_t draws = 0;
  std::size_t bootstrap = 0;
  std::string out, subgroup, model, data, fit, direction;

  struct Flags {
    bool seed = false, draws = false, subgroup = false, model = false, data = false, fit = false;
  };
  auto add = [&](const char* name, const char* about, Flags f) {
    CLI::App* sub = app.add_subcommand(name, about);
    sub->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output path");
    sub->add_option("--threads", inv.threads, "worker threads (results do not depend on it)")->check(CLI::Range(1u, 1024u));
    if (f.seed) sub->add_option("--seed", seed, "master seed");
    if (f.draws) sub->add_option("--draws", draws, "simulation draws per respondent")->check(CLI::PositiveNumber);
    if (f.subgroup) sub->add_option("--subgroup", subgroup, "subgroup preset (A-D, 1-4) or predicate");
    if (f.model) sub->add_option("--model", model, "mnl or mixl")->check(CLI::IsMember({"mnl", "mixl"}));
    if (f.data) sub->add_option("--data", data, "input dataset or design CSV");
    if (f.fit) {
      sub->add_option("--fit", fit, "fit JSON");
      sub->add_option("--direction", direction, "cap or cav")->check(CLI::IsMember({"cap", "cav"}));
      sub->add_option("--bootstrap", bootstrap, "parametric bootstrap replicates");
    }
    return sub;
  };
  add("design", "generate a choice-card design", {.seed = true});
  add("simulate", "simulate choices on a design", {.seed = true, .data = true});
  add("fit", "estimate an MNL or mixed-logit model",
      {.seed = true, .draws = true, .subgroup = true, .model = true, .data = true});
  add("wtp", "willingness-to-pay / willingness-to-accept table", {.seed = true, .fit = true});
  add("potential", "generalized CAP/CAV lines and break-even travel times", {});
  add("recover", "simulate from a known truth and check the fit recovers it",
      {.seed = true, .draws = true, .model = true});
  add("summarize", "dataset summary and attribute means", {.subgroup = true, .data = true});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report(std::cerr, "UsageError", e.what(), kExitValidation);
    return kExitValidation;
  }
  CLI::App* sub = app.get_subcommands().front();
  inv.command = sub->get_name();
  auto given = [&](const char* name) { return sub->get_option_no_throw(name) && sub->count(name) > 0; };
  if (given("--config")) inv.config = config;
  if (given("--seed")) inv.seed = seed;
  if (given("--draws")) inv.draws = draws;
  if (given("--out")) inv.out = out;
  if (given("--subgroup")) inv.subgroup = subgroup;
  if (given("--model")) inv.model = model;
  if (given("--data")) inv.data = data;
  if (given("--fit")) inv.fit = fit;
  if (given("--direction")) inv.direction = direction;
  if (given("--bootstrap")) inv.bootstrap = bootstrap;
  return run(inv, std::cout, std::cerr);
}

}  // namespace dce::cli
