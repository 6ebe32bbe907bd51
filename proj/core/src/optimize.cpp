#include "dcekit/optimize.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace dce {
namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;

double max_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// Inverse-curvature BFGS update for the negated objective.
void bfgs_update(Eigen::MatrixXd& inverse, const Eigen::VectorXd& s, const Eigen::VectorXd& y,
                 bool& scaled) {
  const double sy = s.dot(y);
  if (!(sy > 1e-12 * s.norm() * y.norm())) return;
  if (!scaled) {
    inverse = Eigen::MatrixXd::Identity(s.size(), s.size()) * (sy / y.dot(y));
    scaled = true;
  }
  const double rho = 1.0 / sy;
  const Eigen::VectorXd hy = inverse * y;
  inverse += rho * rho * (sy + y.dot(hy)) * (s * s.transpose()) -
             rho * (hy * s.transpose() + s * hy.transpose());
}

struct Step {
  bool accepted = false;
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Backtracking along the projected path x + t * direction. A step that
/// does not lower the objective beyond rounding and shrinks the gradient is
/// also accepted, so iterations can finish once Armijo gains drown in
/// rounding.
template <typename Project>
Step line_search(const ValueAndGradient& f, const Eigen::VectorXd& x, double value,
                 const Eigen::VectorXd& gradient, const Eigen::VectorXd& direction, const Project& project) {
  const double rounding = 1e-13 * std::max(1.0, std::fabs(value));
  double step = 1.0;
  Step out;
  for (int i = 0; i < kMaxHalvings; ++i, step *= 0.5) {
    out.x = project(x + step * direction);
    const double gain = gradient.dot(out.x - x);
    out.gradient.resize(x.size());
    out.value = f(out.x, &out.gradient);
    if (!std::isfinite(out.value) || !out.gradient.allFinite()) continue;
    if (out.value >= value + kArmijo * gain ||
        (out.value >= value - rounding && max_norm(out.gradient) < max_norm(gradient))) {
      out.accepted = true;
      return out;
    }
  }
  return out;
}

OptimizeResult run(const ValueAndGradient& f, const HessianFunction* hessian, Eigen::VectorXd x,
                   const OptimizeOptions& options, Eigen::MatrixXd inverse) {
  OptimizeResult result;
  const auto n = x.size();
  const Eigen::VectorXd& lower = options.lower_bounds;
  const bool bounded = lower.size() != 0;
  if (bounded && lower.size() != n) throw std::invalid_argument("lower_bounds has the wrong length");
  auto project = [&](Eigen::VectorXd v) {
    if (bounded) v = v.cwiseMax(lower);
    return v;
  };
  // Gradient with components pinned at an active bound zeroed.
  auto projected = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& g) {
    Eigen::VectorXd pg = g;
    if (bounded)
      for (Eigen::Index k = 0; k < n; ++k)
        if (at[k] <= lower[k] && g[k] <= 0) pg[k] = 0.0;
    return pg;
  };

  x = project(std::move(x));
  Eigen::VectorXd g(n);
  double value = f(x, &g);
  if (!std::isfinite(value)) {
    result.x = x;
    result.value = value;
    result.gradient = g;
    result.message = "objective is not finite at the starting point";
    return result;
  }
  bool scaled = inverse.size() != 0;
  if (!scaled) inverse = Eigen::MatrixXd::Identity(n, n);
  bool reset_once = false;

  int it = 0;
  Eigen::VectorXd pg = projected(x, g);
  for (; it < options.max_iter; ++it) {
    if (max_norm(pg) <= options.grad_tol) {
      result.converged = true;
      break;
    }
    Eigen::VectorXd direction;
    bool newton = false;
    if (hessian) {
      const Eigen::MatrixXd information = -(*hessian)(x);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(information);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-12) {
        direction = ldlt.solve(g);
        newton = direction.allFinite();
      }
    }
    if (!newton) {
      direction = inverse * pg;
      for (Eigen::Index k = 0; k < n; ++k)
        if (pg[k] == 0.0 && bounded && x[k] <= lower[k]) direction[k] = 0.0;
      if (hessian) ++result.quasi_newton_steps;
    }
    if (!(pg.dot(direction) > 0)) direction = pg;

    Step step = line_search(f, x, value, g, direction, project);
    if (!step.accepted && !newton && !reset_once) {
      // Stale curvature; restart from a scaled steepest-ascent step.
      inverse = Eigen::MatrixXd::Identity(n, n);
      scaled = false;
      reset_once = true;
      step = line_search(f, x, value, g, pg / std::max(1.0, pg.norm()), project);
    }
    if (!step.accepted) {
      result.message = "line search failed to improve the objective";
      break;
    }
    reset_once = false;
    bfgs_update(inverse, step.x - x, g - step.gradient, scaled);
    x = std::move(step.x);
    value = step.value;
    g = std::move(step.gradient);
    pg = projected(x, g);
  }
  if (!result.converged && max_norm(pg) <= options.grad_tol) result.converged = true;
  if (!result.converged && result.message.empty()) result.message = "iteration limit reached";
  result.x = std::move(x);
  result.value = value;
  result.gradient = std::move(pg);
  result.iterations = it;
  return result;
}

}  // namespace

OptimizeResult newton_maximize(const ValueAndGradient& f, const HessianFunction& hessian,
                               Eigen::VectorXd x0, const OptimizeOptions& options) {
  return run(f, &hessian, std::move(x0), options, {});
}

OptimizeResult bfgs_maximize(const ValueAndGradient& f, Eigen::VectorXd x0,
                             const OptimizeOptions& options, Eigen::MatrixXd inverse_curvature) {
  return run(f, nullptr, std::move(x0), options, std::move(inverse_curvature));
}

Eigen::MatrixXd numeric_hessian(const ValueAndGradient& f, const Eigen::VectorXd& x,
                                double relative_step) {
  const auto n = x.size();
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd plus(n), minus(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = relative_step * std::max(1.0, std::fabs(x[j]));
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    f(xp, &plus);
    f(xm, &minus);
    h.col(j) = (plus - minus) / (xp[j] - xm[j]);
  }
  return 0.5 * (h + h.transpose());
}

}  // namespace dce
