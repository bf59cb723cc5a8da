#pragma once

#include <functional>

#include <Eigen/Dense>

namespace stochdyn {

/// Residual function of a box-constrained nonlinear least-squares problem.
/// The objective is the plain sum of squared residuals.
struct LeastSquaresProblem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residuals;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  /// Typical magnitude per parameter; sets the finite-difference step.
  Eigen::VectorXd scale;
};

struct LmOptions {
  int max_iterations = 400;
  double relative_tolerance = 1e-14;
  double step_tolerance = 1e-13;
  double fd_relative_step = 1e-7;
  double initial_damping = 1e-3;
};

struct LmResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Parameters sitting on a bound at termination.
  Eigen::Array<bool, Eigen::Dynamic, 1> at_bound;
};

/// Forward/backward difference Jacobian that never steps outside the box.
Eigen::MatrixXd numerical_jacobian(const LeastSquaresProblem& problem, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& r0, double relative_step);

/// Projected Levenberg-Marquardt. Parameters on a bound whose descent
/// direction points outward are frozen for the iteration (active set); trial
/// points are clamped into the box.
LmResult levenberg_marquardt(const LeastSquaresProblem& problem, Eigen::VectorXd x0,
                             const LmOptions& options = {});

}  // namespace stochdyn
