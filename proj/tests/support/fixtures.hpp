#pragma once

#include <cstdint>
#include <string>

#include "dcekit/dcekit.hpp"

namespace dce::test {

/// Reference consumer MNL coefficients ("all respondents").
inline TrueParams consumer_truth() {
  TrueParams t;
  t.fixed = {{"asc:ferme", 4.219},      {"asc:marché", 3.904},   {"asc:supermarché", 3.953},
             {"asc:drive", 3.992},      {"asc:association", 2.957}, {"price", -0.175},
             {"tt:ferme", -0.073},      {"tt:marché", -0.053},   {"tt:supermarché", -0.049},
             {"tt:drive", -0.093},      {"tt:association", -0.035}, {"events", 0.181},
             {"bio", 0.421},            {"range", 0.239}};
  return t;
}

/// Farmer pooled-travel-time coefficients (entraide with a positive sign).
inline TrueParams farmer_pooled_truth() {
  TrueParams t;
  t.fixed = {{"asc:ferme", -0.38}, {"asc:marché", -0.48}, {"asc:supermarché", -0.37},
             {"asc:drive", -0.62}, {"asc:association", -0.066}, {"price", 0.20},
             {"tt", -0.0096},     {"events", -0.070},    {"mutual_aid", 0.19}};
  return t;
}

inline CompiledSpec consumer_spec() {
  return CompiledSpec(consumer_model_preset(), consumer_design_preset(0).schema);
}

inline CompiledSpec farmer_pooled_spec() {
  return CompiledSpec(farmer_model_preset(TravelTimeMode::Pooled), farmer_design_preset(0).schema);
}

inline PanelDataset simulate_consumers(std::size_t n, std::uint64_t seed,
                                       const TrueParams& truth = consumer_truth(),
                                       const ModelSpec& model = consumer_model_preset()) {
  const DesignConfig cfg = consumer_design_preset(seed);
  const CompiledSpec spec(model, cfg.schema);
  return simulate_choices(generate_design(cfg, n), truth, spec, seed + 1);
}

inline PanelDataset simulate_farmers(std::size_t n, std::uint64_t seed) {
  const DesignConfig cfg = farmer_design_preset(seed);
  return simulate_choices(generate_design(cfg, n), farmer_pooled_truth(), farmer_pooled_spec(), seed + 1);
}

/// Fit with the given estimates and a diagonal covariance.
inline FitResult synthetic_fit(const ModelSpec& model, const Schema& schema, const CoefficientMap& values,
                               double se = 0.01) {
  const CompiledSpec spec(model, schema);
  FitResult f;
  f.spec = model;
  f.names = spec.names();
  f.k = spec.size();
  f.estimates = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f.k));
  for (const auto& [name, v] : values) f.estimates[static_cast<Eigen::Index>(spec.index_of(name))] = v;
  f.covariance = Eigen::MatrixXd::Identity(f.estimates.size(), f.estimates.size()) * se * se;
  f.converged = true;
  return f;
}

}  // namespace dce::test
