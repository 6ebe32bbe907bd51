#include "dcekit/simulate.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "dcekit/error.hpp"
#include "dcekit/parallel.hpp"
#include "dcekit/rng.hpp"

namespace dce {

double utility(const Alternative& alternative, const Eigen::VectorXd& params, const CompiledSpec& spec) {
  if (static_cast<std::size_t>(params.size()) != spec.size())
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(spec.size()) +
                                                  " coefficients, got " + std::to_string(params.size()));
  if (alternative.is_opt_out()) return 0.0;
  return spec.row(alternative).dot(params);
}

double utility(const Alternative& alternative, const CoefficientMap& params, const CompiledSpec& spec) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.size()));
  for (const auto& [name, value] : params) beta[static_cast<Eigen::Index>(spec.index_of(name))] = value;
  return utility(alternative, beta, spec);
}

Eigen::VectorXd logit_probs(const Eigen::Ref<const Eigen::VectorXd>& utilities) {
  const double top = utilities.maxCoeff();
  Eigen::VectorXd p = (utilities.array() - top).exp().matrix();
  p /= p.sum();
  return p;
}

namespace {

struct Truth {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  std::vector<bool> random;
};

Truth resolve(const TrueParams& truth, const CompiledSpec& spec) {
  const auto k = static_cast<Eigen::Index>(spec.size());
  Truth out{Eigen::VectorXd::Zero(k), Eigen::VectorXd::Zero(k), std::vector<bool>(spec.size(), false)};
  std::vector<bool> covered(spec.size(), false);
  auto locate = [&](const std::string& name) {
    auto i = spec.find(name);
    if (!i) throw Error(ErrorCode::InvalidTruth, "truth names unknown coefficient '" + name + "'");
    if (covered[*i]) throw Error(ErrorCode::InvalidTruth, "coefficient '" + name + "' declared twice");
    covered[*i] = true;
    return static_cast<Eigen::Index>(*i);
  };
  for (const auto& [name, value] : truth.fixed) {
    if (!std::isfinite(value)) throw Error(ErrorCode::InvalidTruth, "non-finite value for '" + name + "'");
    out.mean[locate(name)] = value;
  }
  for (const auto& [name, law] : truth.random) {
    if (!std::isfinite(law.mean) || !std::isfinite(law.sd) || law.sd < 0)
      throw Error(ErrorCode::InvalidTruth, "invalid Gaussian law for '" + name + "' (sd must be >= 0)");
    const auto i = locate(name);
    out.mean[i] = law.mean;
    out.sd[i] = law.sd;
    out.random[static_cast<std::size_t>(i)] = true;
  }
  for (std::size_t i = 0; i < spec.size(); ++i)
    if (!covered[i])
      throw Error(ErrorCode::InvalidTruth, "truth misses coefficient '" + spec.coefficients()[i].name + "'");
  return out;
}

}  // namespace

ResolvedTruth resolve_truth(const TrueParams& truth, const CompiledSpec& spec) {
  Truth t = resolve(truth, spec);
  return {std::move(t.mean), std::move(t.sd)};
}

PanelDataset simulate_choices(const Design& design, const TrueParams& truth, const CompiledSpec& spec,
                              std::uint64_t seed, unsigned threads) {
  if (design.schema != spec.schema())
    throw Error(ErrorCode::InvalidTruth, "design schema differs from the model schema");
  const Truth law = resolve(truth, spec);

  std::vector<Respondent> respondents = design.respondents;
  parallel_for(respondents.size(), threads, [&](std::size_t i) {
    Rng rng(substream_seed(seed, stream::simulate, i));
    Eigen::VectorXd beta = law.mean;
    for (std::size_t k = 0; k < spec.size(); ++k) {
      if (!law.random[k]) continue;
      const auto e = static_cast<Eigen::Index>(k);
      beta[e] += law.sd[e] * rng.normal();
    }
    for (auto& task : respondents[i].tasks) {
      const Eigen::VectorXd u = spec.task_matrix(task) * beta;
      std::size_t best = 0;
      double best_value = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < task.alternatives.size(); ++j) {
        const double value = u[static_cast<Eigen::Index>(j)] + rng.gumbel();
        if (value > best_value) {
          best_value = value;
          best = j;
        }
      }
      task.chosen = best;
    }
  });

  ValidationOptions v;
  v.alternatives_per_task = 0;
  return PanelDataset(design.schema, std::move(respondents), {}, v);
}

double mixl_prob_oracle(std::span<const ChoiceTask> tasks, const TrueParams& truth,
                        const CompiledSpec& spec, std::size_t n_mc, std::uint64_t seed) {
  if (n_mc < 1) throw Error(ErrorCode::InvalidConfig, "n_mc must be at least 1");
  const Truth law = resolve(truth, spec);
  if (tasks.empty()) return 1.0;

  std::vector<Eigen::MatrixXd> x;
  std::vector<std::size_t> chosen;
  for (const auto& t : tasks) {
    if (!t.chosen) throw Error(ErrorCode::InvalidDataset, "oracle needs tasks with a recorded choice");
    x.push_back(spec.task_matrix(t));
    chosen.push_back(*t.chosen);
  }
  auto sequence_probability = [&](const Eigen::VectorXd& beta) {
    double p = 1.0;
    for (std::size_t t = 0; t < x.size(); ++t)
      p *= logit_probs(x[t] * beta)[static_cast<Eigen::Index>(chosen[t])];
    return p;
  };

  if ((law.sd.array() == 0.0).all()) return sequence_probability(law.mean);

  Rng rng(substream_seed(seed, stream::oracle, 0));
  double sum = 0.0;
  Eigen::VectorXd beta(law.mean.size());
  for (std::size_t m = 0; m < n_mc; ++m) {
    for (Eigen::Index k = 0; k < beta.size(); ++k)
      beta[k] = law.mean[k] + (law.random[static_cast<std::size_t>(k)] ? law.sd[k] * rng.normal() : 0.0);
    sum += sequence_probability(beta);
  }
  return sum / static_cast<double>(n_mc);
}

}  // namespace dce
