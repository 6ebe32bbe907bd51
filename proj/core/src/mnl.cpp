#include "dcekit/mnl.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "dcekit/error.hpp"
#include "dcekit/optimize.hpp"
#include "dcekit/parallel.hpp"
#include "dcekit/simulate.hpp"

namespace dce {

FitStats fit_stats(double loglik, double loglik_null, std::size_t k, std::size_t n_obs) {
  const double kd = static_cast<double>(k);
  FitStats s;
  s.aic = 2.0 * kd - 2.0 * loglik;
  s.bic = kd * std::log(static_cast<double>(n_obs)) - 2.0 * loglik;
  s.adj_rho2 = loglik_null != 0.0 ? 1.0 - (loglik - kd) / loglik_null : 0.0;
  return s;
}

FitStats fit_stats(const FitResult& fit) { return fit_stats(fit.loglik, fit.loglik_null, fit.k, fit.n_obs); }

std::optional<std::size_t> FitResult::find(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  return std::nullopt;
}

std::size_t FitResult::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw Error(ErrorCode::UnknownCoefficient, "fit has no coefficient '" + std::string(name) + "'");
}

double FitResult::estimate(std::string_view name) const {
  return estimates[static_cast<Eigen::Index>(index_of(name))];
}

double FitResult::se(std::string_view name) const {
  const auto i = static_cast<Eigen::Index>(index_of(name));
  return std::sqrt(std::max(0.0, covariance(i, i)));
}

double FitResult::covariance_of(std::string_view a, std::string_view b) const {
  return covariance(static_cast<Eigen::Index>(index_of(a)), static_cast<Eigen::Index>(index_of(b)));
}

Eigen::VectorXd FitResult::standard_errors() const {
  return covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

namespace {

void check_size(const Eigen::VectorXd& params, const EstimationData& data) {
  if (static_cast<std::size_t>(params.size()) != data.k)
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(data.k) +
                                                  " parameters, got " + std::to_string(params.size()));
}

struct Contribution {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

enum Want : unsigned { kValue = 0, kGradient = 1, kHessian = 2 };

Contribution respondent_terms(const RespondentData& r, const Eigen::VectorXd& beta, unsigned want) {
  const auto k = beta.size();
  Contribution c;
  if (want & kGradient) c.gradient = Eigen::VectorXd::Zero(k);
  if (want & kHessian) c.hessian = Eigen::MatrixXd::Zero(k, k);
  for (const auto& t : r.tasks) {
    const Eigen::VectorXd u = t.x * beta;
    const double top = u.maxCoeff();
    const Eigen::ArrayXd e = (u.array() - top).exp();
    const double sum = e.sum();
    const auto chosen = static_cast<Eigen::Index>(t.chosen);
    c.loglik += u[chosen] - top - std::log(sum);
    if (!want) continue;
    const Eigen::VectorXd p = (e / sum).matrix();
    const Eigen::VectorXd xbar = t.x.transpose() * p;
    if (want & kGradient) c.gradient += t.x.row(chosen).transpose() - xbar;
    if (want & kHessian) {
      const Eigen::MatrixXd centered = t.x.rowwise() - xbar.transpose();
      c.hessian -= centered.transpose() * p.asDiagonal() * centered;
    }
  }
  return c;
}

Contribution accumulate(const Eigen::VectorXd& beta, const EstimationData& data, unsigned want,
                        unsigned threads) {
  check_size(beta, data);
  std::vector<Contribution> parts(data.respondents.size());
  parallel_for(parts.size(), threads,
               [&](std::size_t i) { parts[i] = respondent_terms(data.respondents[i], beta, want); });
  Contribution total;
  const auto k = beta.size();
  if (want & kGradient) total.gradient = Eigen::VectorXd::Zero(k);
  if (want & kHessian) total.hessian = Eigen::MatrixXd::Zero(k, k);
  for (const auto& p : parts) {
    total.loglik += p.loglik;
    if (want & kGradient) total.gradient += p.gradient;
    if (want & kHessian) total.hessian += p.hessian;
  }
  return total;
}

/// Largest |beta_k| times the spread of column k over all alternatives.
std::vector<double> utility_spans(const Eigen::VectorXd& beta, const EstimationData& data) {
  const auto k = beta.size();
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  for (const auto& r : data.respondents)
    for (const auto& t : r.tasks) {
      lo = lo.cwiseMin(t.x.colwise().minCoeff().transpose());
      hi = hi.cwiseMax(t.x.colwise().maxCoeff().transpose());
    }
  std::vector<double> out(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = std::fabs(beta[i]) * (hi[i] - lo[i]);
  return out;
}

constexpr double kSeparationSpan = 20.0;

}  // namespace

double mnl_loglik(const Eigen::VectorXd& params, const EstimationData& data, unsigned threads) {
  return accumulate(params, data, kValue, threads).loglik;
}

Eigen::VectorXd mnl_gradient(const Eigen::VectorXd& params, const EstimationData& data, unsigned threads) {
  return accumulate(params, data, kGradient, threads).gradient;
}

Eigen::MatrixXd mnl_hessian(const Eigen::VectorXd& params, const EstimationData& data, unsigned threads) {
  return accumulate(params, data, kHessian, threads).hessian;
}

double mnl_loglik(const Eigen::VectorXd& params, const PanelDataset& dataset, const CompiledSpec& spec) {
  return mnl_loglik(params, build_estimation_data(dataset, spec));
}

Eigen::VectorXd mnl_gradient(const Eigen::VectorXd& params, const PanelDataset& dataset,
                             const CompiledSpec& spec) {
  return mnl_gradient(params, build_estimation_data(dataset, spec));
}

Eigen::MatrixXd mnl_hessian(const Eigen::VectorXd& params, const PanelDataset& dataset,
                            const CompiledSpec& spec) {
  return mnl_hessian(params, build_estimation_data(dataset, spec));
}

Eigen::MatrixXd mnl_respondent_scores(const Eigen::VectorXd& params, const EstimationData& data,
                                      unsigned threads) {
  check_size(params, data);
  Eigen::MatrixXd scores(static_cast<Eigen::Index>(data.respondents.size()), params.size());
  parallel_for(data.respondents.size(), threads, [&](std::size_t i) {
    scores.row(static_cast<Eigen::Index>(i)) =
        respondent_terms(data.respondents[i], params, kGradient).gradient.transpose();
  });
  return scores;
}

FitResult fit_mnl(const PanelDataset& dataset, const CompiledSpec& spec, const FitOptions& options) {
  const EstimationData data = build_estimation_data(dataset, spec);
  if (data.n_obs == 0) throw Error(ErrorCode::EmptyDataset, "no task observations to fit");
  check_identification(data, spec);

  const auto k = static_cast<Eigen::Index>(data.k);
  Eigen::VectorXd start = Eigen::VectorXd::Zero(k);
  if (options.start) {
    if (options.start->size() != k)
      throw Error(ErrorCode::DimensionMismatch, "start vector has the wrong length");
    start = *options.start;
  }

  const unsigned threads = options.threads;
  ValueAndGradient f = [&](const Eigen::VectorXd& b, Eigen::VectorXd* g) {
    Contribution c = accumulate(b, data, g ? kGradient : kValue, threads);
    if (g) *g = std::move(c.gradient);
    return c.loglik;
  };
  HessianFunction h = [&](const Eigen::VectorXd& b) { return mnl_hessian(b, data, threads); };

  OptimizeOptions oo;
  oo.grad_tol = options.tol;
  oo.max_iter = options.max_iter;
  const OptimizeResult opt = newton_maximize(f, h, start, oo);

  FitResult fit;
  fit.model = "mnl";
  fit.spec = spec.spec();
  fit.names = spec.names();
  fit.estimates = opt.x;
  fit.loglik = opt.value;
  fit.loglik_null = data.null_loglik;
  fit.n_obs = data.n_obs;
  fit.n_respondents = data.respondents.size();
  fit.k = data.k;
  const FitStats stats = fit_stats(fit);
  fit.aic = stats.aic;
  fit.bic = stats.bic;
  fit.adj_rho2 = stats.adj_rho2;
  fit.converged = opt.converged;
  fit.iterations = opt.iterations;
  fit.grad_max_norm = opt.gradient.size() ? opt.gradient.cwiseAbs().maxCoeff() : 0.0;
  if (!opt.converged) fit.warnings.push_back("optimizer: " + opt.message);
  if (opt.quasi_newton_steps > 0)
    fit.warnings.push_back("quasi-Newton fallback used on " + std::to_string(opt.quasi_newton_steps) +
                           " iteration(s)");

  bool separated = false;
  const auto spans = utility_spans(opt.x, data);
  for (std::size_t i = 0; i < spans.size(); ++i)
    if (spans[i] > kSeparationSpan) {
      separated = true;
      fit.warnings.push_back("coefficient '" + fit.names[i] +
                             "' is diverging (possible perfect separation)");
    }
  if (separated) fit.converged = false;

  const Eigen::MatrixXd information = -mnl_hessian(opt.x, data, threads);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(information);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  if (!(ev[0] > 1e-10 * scale)) {
    if (separated) {
      fit.covariance = Eigen::MatrixXd::Constant(k, k, std::numeric_limits<double>::quiet_NaN());
      fit.covariance_method = "unavailable";
      return fit;
    }
    Eigen::Index worst = 0;
    eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&worst);
    throw Error(ErrorCode::SingularHessian,
                "information matrix is singular; coefficient '" +
                    fit.names[static_cast<std::size_t>(worst)] + "' is not identified");
  }
  const Eigen::MatrixXd inverse =
      eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  if (options.robust) {
    const Eigen::MatrixXd s = mnl_respondent_scores(opt.x, data, threads);
    const Eigen::MatrixXd meat = s.transpose() * s;
    fit.covariance = inverse * meat * inverse;
    fit.covariance_method = "robust_cluster_respondent";
  } else {
    fit.covariance = inverse;
    fit.covariance_method = "classical";
  }
  fit.covariance = (0.5 * (fit.covariance + fit.covariance.transpose())).eval();
  return fit;
}

double two_sided_p(double z) noexcept { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

}  // namespace dce
