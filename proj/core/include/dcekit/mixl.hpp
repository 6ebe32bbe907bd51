#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dcekit/data.hpp"
#include "dcekit/mnl.hpp"
#include "dcekit/model_spec.hpp"
#include "dcekit/qmc.hpp"

namespace dce {

/// Panel mixed logit with independent Gaussian coefficients.
struct MixlSpec {
  ModelSpec base;
  /// Coefficient names with a random (Gaussian) component; the price
  /// coefficient is never random. Declaration order fixes draw dimensions.
  std::vector<std::string> random_set;
  std::size_t n_draws = 500;
  DrawScheme draw_scheme = DrawScheme::Sobol;
  std::uint64_t seed = 0;
};

/// Every coefficient of the base spec except price.
std::vector<std::string> default_random_set(const CompiledSpec& spec);

/// Dataset, draws and random-coefficient layout prepared for repeated
/// likelihood evaluation with common random numbers.
class MixlProblem {
 public:
  MixlProblem(const PanelDataset& dataset, const MixlSpec& spec);

  const CompiledSpec& compiled() const noexcept { return compiled_; }
  const EstimationData& data() const noexcept { return data_; }
  const DrawBlocks& draws() const noexcept { return draws_; }
  const MixlSpec& spec() const noexcept { return spec_; }

  /// Parameter count: K coefficients then one sd per random coefficient.
  std::size_t n_params() const noexcept { return data_.k + random_index_.size(); }
  const std::vector<std::size_t>& random_index() const noexcept { return random_index_; }
  std::vector<std::string> param_names() const;

  /// sum_i ln[ (1/R) sum_r prod_t P(chosen_it | mean + |sd| * z_ir) ].
  /// Optional gradient and per-respondent scores (rows).
  double loglik(const Eigen::VectorXd& params, Eigen::VectorXd* gradient = nullptr,
                Eigen::MatrixXd* respondent_scores = nullptr, unsigned threads = 1) const;

 private:
  MixlSpec spec_;
  CompiledSpec compiled_;
  EstimationData data_;
  DrawBlocks draws_;
  std::vector<std::size_t> random_index_;

  // Per respondent: stacked task rows, random columns, task offsets and
  // the sum of chosen rows.
  struct Block {
    Eigen::MatrixXd x;
    Eigen::MatrixXd z;
    std::vector<Eigen::Index> offsets;
    std::vector<Eigen::Index> chosen;
    Eigen::VectorXd chosen_sum;
  };
  std::vector<Block> blocks_;
};

double simulated_loglik(const Eigen::VectorXd& params, const PanelDataset& dataset,
                        const MixlSpec& spec);

enum class MixlCovariance { Sandwich, Opg, Hessian };

struct MixlOptions {
  double tol = 1e-5;
  int max_iter = 500;
  /// Defaults to an MNL fit for the coefficients and 0.1 for each sd.
  std::optional<Eigen::VectorXd> start;
  MixlCovariance covariance = MixlCovariance::Sandwich;
  unsigned threads = 1;
};

struct MixlFit {
  FitResult fit;

  std::map<std::string, double> means() const;
  /// Reported as |sd|.
  std::map<std::string, double> sds() const;
  std::map<std::string, double> fixed() const;
};

MixlFit fit_mixl(const PanelDataset& dataset, const MixlSpec& spec, const MixlOptions& options = {});

}  // namespace dce
