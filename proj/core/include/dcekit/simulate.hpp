#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>

#include <Eigen/Core>

#include "dcekit/data.hpp"
#include "dcekit/design.hpp"
#include "dcekit/model_spec.hpp"

namespace dce {

using CoefficientMap = std::map<std::string, double>;

/// Deterministic utility of one alternative; the opt-out is always 0.
double utility(const Alternative& alternative, const Eigen::VectorXd& params,
               const CompiledSpec& spec);

/// Named-coefficient form. Unknown names throw UnknownCoefficient; absent
/// names contribute nothing.
double utility(const Alternative& alternative, const CoefficientMap& params,
               const CompiledSpec& spec);

/// Softmax with max-subtraction.
Eigen::VectorXd logit_probs(const Eigen::Ref<const Eigen::VectorXd>& utilities);

struct GaussianCoefficient {
  double mean = 0.0;
  double sd = 0.0;
};

/// Population law of the utility coefficients used to simulate data.
struct TrueParams {
  CoefficientMap fixed;
  std::map<std::string, GaussianCoefficient> random;
};

/// Mean and standard-deviation vectors in spec coefficient order. Throws
/// InvalidTruth for negative sds, unknown or missing coefficients, or a
/// coefficient declared both fixed and random.
struct ResolvedTruth {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};
ResolvedTruth resolve_truth(const TrueParams& truth, const CompiledSpec& spec);

/// Each respondent draws one coefficient vector (kept for all of that
/// respondent's tasks) and picks the argmax of utility plus standard
/// Gumbel noise. Deterministic in seed, independent of `threads`.
PanelDataset simulate_choices(const Design& design, const TrueParams& truth,
                              const CompiledSpec& spec, std::uint64_t seed,
                              unsigned threads = 1);

/// Plain Monte-Carlo estimate of E_beta[ prod_t P(chosen_t | beta) ] for one
/// respondent's task sequence. Exact product when every sd is zero.
double mixl_prob_oracle(std::span<const ChoiceTask> tasks, const TrueParams& truth,
                        const CompiledSpec& spec, std::size_t n_mc, std::uint64_t seed = 0);

}  // namespace dce
