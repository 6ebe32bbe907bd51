#pragma once

#include <functional>
#include <string>

#include <Eigen/Core>

namespace dce {

/// Objective value; writes the gradient when `gradient` is non-null.
using ValueAndGradient = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* gradient)>;
using HessianFunction = std::function<Eigen::MatrixXd(const Eigen::VectorXd& x)>;

struct OptimizeOptions {
  /// Converged when the gradient max-norm falls to this value.
  double grad_tol = 1e-8;
  int max_iter = 200;
  /// Optional lower bounds (BFGS only; -inf for free components). Bound
  /// components are handled by projection, and convergence is judged on
  /// the projected gradient.
  Eigen::VectorXd lower_bounds;
};

struct OptimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
  /// Iterations that used the quasi-Newton direction instead of Newton's.
  int quasi_newton_steps = 0;
  std::string message;
};

/// Newton ascent with Armijo backtracking. When the negated Hessian is not
/// safely positive definite the step falls back to a BFGS direction built
/// from the iterates seen so far.
OptimizeResult newton_maximize(const ValueAndGradient& f, const HessianFunction& hessian,
                               Eigen::VectorXd x0, const OptimizeOptions& options);

/// BFGS ascent. `inverse_curvature` seeds the inverse of the negated
/// Hessian; an empty matrix means identity.
OptimizeResult bfgs_maximize(const ValueAndGradient& f, Eigen::VectorXd x0,
                             const OptimizeOptions& options,
                             Eigen::MatrixXd inverse_curvature = {});

/// Central differences of the gradient, symmetrized. Used for covariance
/// estimates when only first derivatives are analytic.
Eigen::MatrixXd numeric_hessian(const ValueAndGradient& f, const Eigen::VectorXd& x,
                                double relative_step = 1e-5);

}  // namespace dce
