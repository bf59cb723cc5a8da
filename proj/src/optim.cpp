#include "stochdyn/optim.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "stochdyn/error.hpp"

namespace stochdyn {
namespace {

Eigen::VectorXd clamp_box(const LeastSquaresProblem& p, Eigen::VectorXd x) {
  return x.cwiseMax(p.lower).cwiseMin(p.upper);
}

}  // namespace

Eigen::MatrixXd numerical_jacobian(const LeastSquaresProblem& problem, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& r0, double relative_step) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd jac(r0.size(), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double typical = problem.scale.size() == n ? problem.scale(k) : 1.0;
    double h = relative_step * std::max(std::fabs(x(k)), std::fabs(typical));
    if (h == 0.0) h = relative_step;
    Eigen::VectorXd xh = x;
    if (x(k) + h > problem.upper(k)) h = -h;
    xh(k) = x(k) + h;
    jac.col(k) = (problem.residuals(xh) - r0) / h;
  }
  return jac;
}

LmResult levenberg_marquardt(const LeastSquaresProblem& problem, Eigen::VectorXd x0,
                             const LmOptions& options) {
  const Eigen::Index n = x0.size();
  if (problem.lower.size() != n || problem.upper.size() != n)
    throw Error(ErrorCode::parameter, "bounds do not match parameter count");

  LmResult res;
  res.x = clamp_box(problem, std::move(x0));
  res.residuals = problem.residuals(res.x);
  if (!res.residuals.allFinite())
    throw Error(ErrorCode::evaluation, "residuals are not finite at the starting point");
  res.objective = res.residuals.squaredNorm();

  double lambda = options.initial_damping;
  Eigen::MatrixXd jac = numerical_jacobian(problem, res.x, res.residuals, options.fd_relative_step);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    res.iterations = iter + 1;
    const Eigen::VectorXd grad = jac.transpose() * res.residuals;
    std::vector<Eigen::Index> free;
    for (Eigen::Index k = 0; k < n; ++k) {
      const bool at_lo = res.x(k) <= problem.lower(k) && grad(k) > 0.0;
      const bool at_hi = res.x(k) >= problem.upper(k) && grad(k) < 0.0;
      if (!at_lo && !at_hi) free.push_back(k);
    }
    if (free.empty() || res.objective == 0.0) {
      res.converged = true;
      break;
    }
    const auto m = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd jf(jac.rows(), m);
    for (Eigen::Index j = 0; j < m; ++j) jf.col(j) = jac.col(free[static_cast<std::size_t>(j)]);
    const Eigen::MatrixXd jtj = jf.transpose() * jf;
    const Eigen::VectorXd g = jf.transpose() * res.residuals;
    Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-300);

    bool improved = false;
    bool tiny_step = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      Eigen::VectorXd trial = res.x;
      for (Eigen::Index j = 0; j < m; ++j) trial(free[static_cast<std::size_t>(j)]) += step(j);
      trial = clamp_box(problem, trial);
      const double step_norm = (trial - res.x).norm();
      if (step_norm <= options.step_tolerance * (res.x.norm() + options.step_tolerance)) {
        tiny_step = true;
        break;
      }
      const Eigen::VectorXd r = problem.residuals(trial);
      const double f = r.allFinite() ? r.squaredNorm() : std::numeric_limits<double>::infinity();
      if (f < res.objective) {
        const double reduction = (res.objective - f) / res.objective;
        res.x = trial;
        res.residuals = r;
        res.objective = f;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (reduction < options.relative_tolerance) tiny_step = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved || tiny_step) {
      res.converged = true;
      break;
    }
    jac = numerical_jacobian(problem, res.x, res.residuals, options.fd_relative_step);
  }
  res.jacobian = numerical_jacobian(problem, res.x, res.residuals, options.fd_relative_step);
  res.at_bound = (res.x.array() <= problem.lower.array()) || (res.x.array() >= problem.upper.array());
  return res;
}

}  // namespace stochdyn
