#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dcekit/data.hpp"
#include "dcekit/model_spec.hpp"

namespace dce {

struct FitStats {
  double aic = 0.0;
  double bic = 0.0;
  double adj_rho2 = 0.0;
};

/// aic = 2k - 2 LL, bic = k ln(n) - 2 LL, adjusted rho2 = 1 - (LL - k) / LL0.
FitStats fit_stats(double loglik, double loglik_null, std::size_t k, std::size_t n_obs);

struct DrawInfo {
  std::string scheme;
  std::size_t n_draws = 0;
  std::uint64_t seed = 0;
};

/// Estimates, covariance and fit statistics of an MNL or mixed-logit fit.
///
/// For mixed logit the parameter vector is the spec coefficients (means for
/// random ones) followed by one "sd:<name>" entry per random coefficient.
struct FitResult {
  std::string model = "mnl";
  ModelSpec spec;
  std::vector<std::string> names;
  Eigen::VectorXd estimates;
  Eigen::MatrixXd covariance;
  std::string covariance_method = "classical";

  double loglik = 0.0;
  double loglik_null = 0.0;
  std::size_t n_obs = 0;
  std::size_t n_respondents = 0;
  std::size_t k = 0;
  double aic = 0.0;
  double bic = 0.0;
  double adj_rho2 = 0.0;

  bool converged = false;
  int iterations = 0;
  double grad_max_norm = 0.0;
  std::vector<std::string> warnings;

  std::vector<std::string> random_coefficients;
  std::optional<DrawInfo> draws;

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws UnknownCoefficient.
  std::size_t index_of(std::string_view name) const;
  double estimate(std::string_view name) const;
  double se(std::string_view name) const;
  double covariance_of(std::string_view a, std::string_view b) const;
  Eigen::VectorXd standard_errors() const;
};

/// Recomputes aic/bic/adj_rho2 from loglik, loglik_null, k and n_obs.
FitStats fit_stats(const FitResult& fit);

/// Sum over tasks of ln P(chosen). Throws DimensionMismatch.
double mnl_loglik(const Eigen::VectorXd& params, const EstimationData& data, unsigned threads = 1);
/// Score, sum over tasks of (x_chosen - sum_j p_j x_j).
Eigen::VectorXd mnl_gradient(const Eigen::VectorXd& params, const EstimationData& data,
                             unsigned threads = 1);
/// Hessian of the log-likelihood, -sum_t X' (diag(p) - p p') X.
Eigen::MatrixXd mnl_hessian(const Eigen::VectorXd& params, const EstimationData& data,
                            unsigned threads = 1);

double mnl_loglik(const Eigen::VectorXd& params, const PanelDataset& dataset,
                  const CompiledSpec& spec);
Eigen::VectorXd mnl_gradient(const Eigen::VectorXd& params, const PanelDataset& dataset,
                             const CompiledSpec& spec);
Eigen::MatrixXd mnl_hessian(const Eigen::VectorXd& params, const PanelDataset& dataset,
                            const CompiledSpec& spec);

/// Per-respondent scores stacked as rows (respondent-clustered OPG input).
Eigen::MatrixXd mnl_respondent_scores(const Eigen::VectorXd& params, const EstimationData& data,
                                      unsigned threads = 1);

struct FitOptions {
  double tol = 1e-8;
  int max_iter = 200;
  /// All zeros when empty.
  std::optional<Eigen::VectorXd> start;
  /// Respondent-clustered sandwich instead of inverse information.
  bool robust = false;
  unsigned threads = 1;
};

/// Exact maximum likelihood. Throws DegenerateData for unidentified
/// covariates and SingularHessian for a singular information matrix.
/// Non-convergence (including apparent separation) is reported through
/// `converged == false` and `warnings`.
FitResult fit_mnl(const PanelDataset& dataset, const CompiledSpec& spec,
                  const FitOptions& options = {});

/// Two-sided normal p-value of z.
double two_sided_p(double z) noexcept;

}  // namespace dce
