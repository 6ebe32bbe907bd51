#include "dcekit/mixl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "dcekit/error.hpp"
#include "dcekit/optimize.hpp"
#include "dcekit/parallel.hpp"

namespace dce {

std::vector<std::string> default_random_set(const CompiledSpec& spec) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < spec.size(); ++i)
    if (i != spec.price_index()) out.push_back(spec.coefficients()[i].name);
  return out;
}

MixlProblem::MixlProblem(const PanelDataset& dataset, const MixlSpec& spec)
    : spec_(spec), compiled_(spec.base, dataset.schema()) {
  if (spec_.n_draws < 1) throw Error(ErrorCode::InvalidConfig, "n_draws must be at least 1");
  std::set<std::size_t> seen;
  for (const auto& name : spec_.random_set) {
    const std::size_t i = compiled_.index_of(name);
    if (i == compiled_.price_index())
      throw Error(ErrorCode::InvalidConfig, "the price coefficient cannot be random");
    if (!seen.insert(i).second)
      throw Error(ErrorCode::InvalidConfig, "random coefficient '" + name + "' listed twice");
    random_index_.push_back(i);
  }
  data_ = build_estimation_data(dataset, compiled_);
  draws_ = quasi_draws(data_.respondents.size(), random_index_.size(), spec_.n_draws,
                       spec_.draw_scheme, spec_.seed);

  const auto k = static_cast<Eigen::Index>(data_.k);
  blocks_.resize(data_.respondents.size());
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& tasks = data_.respondents[i].tasks;
    Block& b = blocks_[i];
    Eigen::Index rows = 0;
    for (const auto& t : tasks) {
      b.offsets.push_back(rows);
      b.chosen.push_back(rows + static_cast<Eigen::Index>(t.chosen));
      rows += t.x.rows();
    }
    b.offsets.push_back(rows);
    b.x.resize(rows, k);
    for (std::size_t t = 0; t < tasks.size(); ++t) b.x.middleRows(b.offsets[t], tasks[t].x.rows()) = tasks[t].x;
    b.z.resize(rows, static_cast<Eigen::Index>(random_index_.size()));
    for (std::size_t d = 0; d < random_index_.size(); ++d)
      b.z.col(static_cast<Eigen::Index>(d)) = b.x.col(static_cast<Eigen::Index>(random_index_[d]));
    b.chosen_sum = Eigen::VectorXd::Zero(k);
    for (Eigen::Index c : b.chosen) b.chosen_sum += b.x.row(c).transpose();
  }
}

std::vector<std::string> MixlProblem::param_names() const {
  std::vector<std::string> out = compiled_.names();
  for (std::size_t i : random_index_) out.push_back("sd:" + compiled_.coefficients()[i].name);
  return out;
}

namespace {

struct Slot {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
};

}  // namespace

// Utilities of all draws at once: U = x * mean + z * diag(|sd|) * draws,
// one column per draw. Task blocks of rows are soft-maxed column-wise.
double MixlProblem::loglik(const Eigen::VectorXd& params, Eigen::VectorXd* gradient,
                           Eigen::MatrixXd* respondent_scores, unsigned threads) const {
  const auto k = static_cast<Eigen::Index>(data_.k);
  const auto n_random = static_cast<Eigen::Index>(random_index_.size());
  const auto n_params = k + n_random;
  if (params.size() != n_params)
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(n_params) +
                                                  " parameters, got " + std::to_string(params.size()));
  const bool want_score = gradient || respondent_scores;
  const Eigen::VectorXd mean = params.head(k);
  const Eigen::ArrayXd scale = params.tail(n_random).array().abs();
  const Eigen::ArrayXd sign =
      params.tail(n_random).array().unaryExpr([](double s) { return s < 0 ? -1.0 : 1.0; });
  const auto n_draws = static_cast<Eigen::Index>(draws_.n_draws());

  std::vector<Slot> slots(blocks_.size());
  parallel_for(slots.size(), threads, [&](std::size_t i) {
    const Block& b = blocks_[i];
    const Eigen::Map<const Eigen::MatrixXd> z(draws_.values().data() + i * draws_.n_draws() * draws_.dim(),
                                              n_random, n_draws);
    Eigen::MatrixXd u = (b.x * mean).replicate(1, n_draws);
    if (n_random > 0) u.noalias() += b.z * (scale.matrix().asDiagonal() * z);

    Eigen::ArrayXd ll = Eigen::ArrayXd::Zero(n_draws);
    for (std::size_t t = 0; t + 1 < b.offsets.size(); ++t) {
      auto block = u.middleRows(b.offsets[t], b.offsets[t + 1] - b.offsets[t]);
      const Eigen::RowVectorXd top = block.colwise().maxCoeff();
      block.rowwise() -= top;
      const Eigen::RowVectorXd chosen = block.row(b.chosen[t] - b.offsets[t]);
      block = block.array().exp().matrix();
      const Eigen::RowVectorXd sum = block.colwise().sum();
      ll += (chosen.array() - sum.array().log()).transpose();
      if (want_score) block.array().rowwise() /= sum.array();
    }
    const double top = ll.maxCoeff();
    Eigen::VectorXd w = (ll - top).exp().matrix();
    const double total = w.sum();
    slots[i].loglik = top + std::log(total / static_cast<double>(n_draws));
    if (!want_score) return;
    w /= total;
    // u now holds probabilities.
    Eigen::VectorXd g(n_params);
    g.head(k) = b.chosen_sum - b.x.transpose() * (u * w);
    if (n_random > 0) {
      const Eigen::MatrixXd wz = (z * w.asDiagonal()).transpose();  // draws x random
      const Eigen::MatrixXd q = u * wz;                              // rows x random
      const Eigen::VectorXd zbar = wz.colwise().sum().transpose();
      for (Eigen::Index d = 0; d < n_random; ++d) {
        double chosen = 0.0;
        for (Eigen::Index c : b.chosen) chosen += b.z(c, d);
        g[k + d] = sign[d] * (zbar[d] * chosen - b.z.col(d).dot(q.col(d)));
      }
    }
    slots[i].gradient = std::move(g);
  });

  double value = 0.0;
  if (gradient) gradient->setZero(n_params);
  if (respondent_scores) respondent_scores->resize(static_cast<Eigen::Index>(slots.size()), n_params);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    value += slots[i].loglik;
    if (gradient) *gradient += slots[i].gradient;
    if (respondent_scores) respondent_scores->row(static_cast<Eigen::Index>(i)) = slots[i].gradient.transpose();
  }
  return value;
}

double simulated_loglik(const Eigen::VectorXd& params, const PanelDataset& dataset, const MixlSpec& spec) {
  return MixlProblem(dataset, spec).loglik(params);
}

std::map<std::string, double> MixlFit::means() const {
  std::map<std::string, double> out;
  for (const auto& name : fit.random_coefficients) out[name] = fit.estimate(name);
  return out;
}

std::map<std::string, double> MixlFit::sds() const {
  std::map<std::string, double> out;
  for (const auto& name : fit.random_coefficients) out[name] = std::fabs(fit.estimate("sd:" + name));
  return out;
}

std::map<std::string, double> MixlFit::fixed() const {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    const auto& name = fit.names[i];
    if (name.rfind("sd:", 0) == 0) continue;
    if (std::find(fit.random_coefficients.begin(), fit.random_coefficients.end(), name) !=
        fit.random_coefficients.end())
      continue;
    out[name] = fit.estimates[static_cast<Eigen::Index>(i)];
  }
  return out;
}

namespace {

Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& m, const std::vector<std::string>& names,
                            std::string_view what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  if (!(ev[0] > 1e-10 * scale)) {
    Eigen::Index worst = 0;
    eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&worst);
    throw Error(ErrorCode::SingularHessian, std::string(what) + " is singular; parameter '" +
                                                names[static_cast<std::size_t>(worst)] +
                                                "' is not identified");
  }
  return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

MixlFit fit_mixl(const PanelDataset& dataset, const MixlSpec& spec, const MixlOptions& options) {
  const MixlProblem problem(dataset, spec);
  if (problem.data().n_obs == 0) throw Error(ErrorCode::EmptyDataset, "no task observations to fit");
  check_identification(problem.data(), problem.compiled());

  const auto k = static_cast<Eigen::Index>(problem.data().k);
  const auto n_params = static_cast<Eigen::Index>(problem.n_params());
  const std::vector<std::string> names = problem.param_names();

  Eigen::VectorXd start(n_params);
  if (options.start) {
    if (options.start->size() != n_params)
      throw Error(ErrorCode::DimensionMismatch, "start vector has the wrong length");
    start = *options.start;
    start.tail(n_params - k) = start.tail(n_params - k).cwiseAbs();
  } else {
    FitOptions mnl;
    mnl.threads = options.threads;
    const FitResult base = fit_mnl(dataset, problem.compiled(), mnl);
    start.head(k) = base.estimates;
    start.tail(n_params - k).setConstant(0.1);
  }

  const unsigned threads = options.threads;
  ValueAndGradient f = [&](const Eigen::VectorXd& p, Eigen::VectorXd* g) {
    return problem.loglik(p, g, nullptr, threads);
  };

  Eigen::MatrixXd seed_curvature;
  {
    Eigen::MatrixXd s;
    problem.loglik(start, nullptr, &s, threads);
    const Eigen::MatrixXd opg = s.transpose() * s;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(opg);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-12)
      seed_curvature = ldlt.solve(Eigen::MatrixXd::Identity(n_params, n_params));
  }

  // The likelihood depends on |sd| only, so the sd block is searched on
  // sd >= 0 with a projected step; an sd pinned at 0 is then a proper
  // boundary optimum instead of a kink.
  OptimizeOptions oo;
  oo.grad_tol = options.tol;
  oo.max_iter = options.max_iter;
  oo.lower_bounds = Eigen::VectorXd::Constant(n_params, -std::numeric_limits<double>::infinity());
  oo.lower_bounds.tail(n_params - k).setZero();
  const OptimizeResult opt = bfgs_maximize(f, start, oo, seed_curvature);

  MixlFit out;
  FitResult& fit = out.fit;
  fit.model = "mixl";
  fit.spec = spec.base;
  fit.names = names;
  fit.estimates = opt.x;
  fit.loglik = opt.value;
  fit.loglik_null = problem.data().null_loglik;
  fit.n_obs = problem.data().n_obs;
  fit.n_respondents = problem.data().respondents.size();
  fit.k = static_cast<std::size_t>(n_params);
  const FitStats stats = fit_stats(fit);
  fit.aic = stats.aic;
  fit.bic = stats.bic;
  fit.adj_rho2 = stats.adj_rho2;
  fit.converged = opt.converged;
  fit.iterations = opt.iterations;
  fit.grad_max_norm = opt.gradient.size() ? opt.gradient.cwiseAbs().maxCoeff() : 0.0;
  if (!opt.converged) fit.warnings.push_back("optimizer: " + opt.message);
  fit.random_coefficients = spec.random_set;
  fit.draws = DrawInfo{std::string(to_string(spec.draw_scheme)), spec.n_draws, spec.seed};

  Eigen::MatrixXd scores;
  problem.loglik(opt.x, nullptr, &scores, threads);
  const Eigen::MatrixXd opg = scores.transpose() * scores;
  Eigen::MatrixXd cov;
  switch (options.covariance) {
    case MixlCovariance::Opg:
      cov = inverse_spd(opg, names, "outer product of scores");
      fit.covariance_method = "opg";
      break;
    case MixlCovariance::Hessian:
      cov = inverse_spd(-numeric_hessian(f, opt.x), names, "information matrix");
      fit.covariance_method = "hessian";
      break;
    case MixlCovariance::Sandwich: {
      const Eigen::MatrixXd bread = inverse_spd(-numeric_hessian(f, opt.x), names, "information matrix");
      cov = bread * opg * bread;
      fit.covariance_method = "sandwich";
      break;
    }
  }

  // Report |sd|; flip the matching covariance rows and columns.
  Eigen::VectorXd sign = Eigen::VectorXd::Ones(n_params);
  for (Eigen::Index d = k; d < n_params; ++d)
    if (fit.estimates[d] < 0) {
      sign[d] = -1.0;
      fit.estimates[d] = -fit.estimates[d];
    }
  cov = sign.asDiagonal() * cov * sign.asDiagonal();
  fit.covariance = 0.5 * (cov + cov.transpose());
  return out;
}

}  // namespace dce
