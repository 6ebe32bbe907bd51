#include <benchmark/benchmark.h>

#include "dcekit/dcekit.hpp"

using namespace dce;

namespace {

TrueParams consumer_truth() {
  TrueParams t;
  t.fixed = {{"asc:ferme", 4.219},      {"asc:marché", 3.904},   {"asc:supermarché", 3.953},
             {"asc:drive", 3.992},      {"asc:association", 2.957}, {"price", -0.175},
             {"tt:ferme", -0.073},      {"tt:marché", -0.053},   {"tt:supermarché", -0.049},
             {"tt:drive", -0.093},      {"tt:association", -0.035}, {"events", 0.181},
             {"bio", 0.421},            {"range", 0.239}};
  return t;
}

const PanelDataset& dataset() {
  static const PanelDataset d = [] {
    const DesignConfig cfg = consumer_design_preset(1);
    const CompiledSpec spec(consumer_model_preset(), cfg.schema);
    return simulate_choices(generate_design(cfg, 1000), consumer_truth(), spec, 2);
  }();
  return d;
}

Eigen::VectorXd start(const CompiledSpec& spec) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(spec.size()));
  const TrueParams t = consumer_truth();
  for (std::size_t k = 0; k < spec.size(); ++k) x[static_cast<Eigen::Index>(k)] = t.fixed.at(spec.names()[k]);
  return x;
}

void BM_MnlLoglikGradient(benchmark::State& state) {
  const CompiledSpec spec(consumer_model_preset(), dataset().schema());
  const EstimationData data = build_estimation_data(dataset(), spec);
  const Eigen::VectorXd x = start(spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mnl_loglik(x, data));
    benchmark::DoNotOptimize(mnl_gradient(x, data));
  }
}
BENCHMARK(BM_MnlLoglikGradient)->Unit(benchmark::kMillisecond);

void BM_MnlFit(benchmark::State& state) {
  const CompiledSpec spec(consumer_model_preset(), dataset().schema());
  for (auto _ : state) benchmark::DoNotOptimize(fit_mnl(dataset(), spec));
}
BENCHMARK(BM_MnlFit)->Unit(benchmark::kMillisecond);

void BM_MixlLoglikGradient(benchmark::State& state) {
  MixlSpec ms;
  ms.base = consumer_model_preset();
  ms.random_set = {"bio"};
  ms.n_draws = static_cast<std::size_t>(state.range(0));
  const MixlProblem p(dataset(), ms);
  Eigen::VectorXd x(15);
  x.head(14) = start(p.compiled());
  x[14] = 0.2;
  Eigen::VectorXd g;
  for (auto _ : state) benchmark::DoNotOptimize(p.loglik(x, &g));
}
BENCHMARK(BM_MixlLoglikGradient)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_SobolDraws(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(quasi_draws(1000, 3, 500, DrawScheme::Sobol, 7));
}
BENCHMARK(BM_SobolDraws)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
