#include "stochdyn/sde.hpp"

#include <cmath>
#include <string>

#include "stochdyn/error.hpp"
#include "stochdyn/potential.hpp"

namespace stochdyn {

DiffusionSpec::DiffusionSpec(double sigma) : form_(sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw Error(ErrorCode::parameter, "scalar diffusion must be finite and nonnegative");
}

DiffusionSpec::DiffusionSpec(MatrixField field) : form_(std::move(field)) {}

Eigen::VectorXd DiffusionSpec::apply(const Eigen::VectorXd& r, double t,
                                     const Eigen::VectorXd& z) const {
  if (is_scalar()) return scalar() * z;
  const Eigen::MatrixXd s = std::get<MatrixField>(form_)(r, t);
  if (s.rows() != z.size() || s.cols() != z.size() || !s.allFinite())
    throw Error(ErrorCode::evaluation, "diffusion matrix is not finite or has the wrong shape");
  return s * z;
}

bool ConstraintPolicy::allows(const Point& q) const {
  if (!point_in_region(region, q)) return false;
  for (const auto& hole : excluded)
    if (point_in_region(hole, q)) return false;
  return true;
}

Eigen::VectorXd euler_step(const Eigen::VectorXd& r, double t, double dt, const DriftField& drift,
                           const DiffusionSpec& diffusion, const Eigen::VectorXd& z) {
  if (!(dt > 0.0)) throw Error(ErrorCode::parameter, "euler_step requires dt > 0");
  const Eigen::VectorXd mu = drift(r, t);
  if (mu.size() != r.size() || !mu.allFinite())
    throw Error(ErrorCode::evaluation, "drift is not finite at t = " + format_double(t));
  const Eigen::VectorXd noise = diffusion.apply(r, t, z);
  return r + mu * dt + noise * std::sqrt(dt);
}

namespace {

void check_grid(const Eigen::VectorXd& grid) {
  if (grid.size() < 2) throw Error(ErrorCode::parameter, "time grid needs at least 2 points");
  for (Eigen::Index i = 1; i < grid.size(); ++i)
    if (!(grid(i) > grid(i - 1)))
      throw Error(ErrorCode::parameter, "time grid must be strictly increasing");
}

Point as_point(const Eigen::VectorXd& r) { return Point(r(0), r.size() > 1 ? r(1) : 0.0); }

}  // namespace

Trajectory simulate_sde(const Eigen::VectorXd& r0, const Eigen::VectorXd& grid,
                        const DriftField& drift, const DiffusionSpec& diffusion, RngStream& rng,
                        const std::optional<ConstraintPolicy>& constraint, SimulationStats* stats) {
  check_grid(grid);
  const Eigen::Index p = r0.size();
  if (constraint) {
    if (p != 2) throw Error(ErrorCode::parameter, "constrained simulation needs 2-D positions");
    if (constraint->max_attempts < 1) throw Error(ErrorCode::parameter, "max_attempts must be >= 1");
    if (!constraint->allows(as_point(r0)))
      throw Error(ErrorCode::domain, "initial position lies outside the region");
  }
  Eigen::MatrixXd path(grid.size(), p);
  path.row(0) = r0.transpose();
  Eigen::VectorXd r = r0;
  for (Eigen::Index i = 0; i + 1 < grid.size(); ++i) {
    const double t = grid(i);
    const double dt = grid(i + 1) - t;
    Eigen::VectorXd next = euler_step(r, t, dt, drift, diffusion, rng.normal_vector(p));
    if (constraint) {
      int attempt = 1;
      while (!(next.allFinite() && constraint->allows(as_point(next)))) {
        if (stats) ++stats->rejections;
        if (attempt >= constraint->max_attempts) {
          next = r;
          if (stats) ++stats->fallbacks;
          break;
        }
        next = euler_step(r, t, dt, drift, diffusion, rng.normal_vector(p));
        ++attempt;
      }
    }
    if (!next.allFinite())
      throw Error(ErrorCode::divergence, "state is not finite at step " + std::to_string(i + 1));
    r = std::move(next);
    path.row(i + 1) = r.transpose();
  }
  return Trajectory(grid, std::move(path));
}

DriftField ou_drift(const OUParams& params) {
  if (!(params.alpha > 0.0)) throw Error(ErrorCode::parameter, "OU alpha must be positive");
  if (!(params.sigma >= 0.0)) throw Error(ErrorCode::parameter, "OU sigma must be nonnegative");
  return [alpha = params.alpha, a = params.attractor](const Eigen::VectorXd& r, double) -> Eigen::VectorXd {
    return alpha * (a - r);
  };
}

DriftField gradient_system_drift(const PotentialSpec& potential) {
  return [potential](const Eigen::VectorXd& r, double) -> Eigen::VectorXd {
    return -grad_potential(potential, as_point(r));
  };
}

Trajectory simulate_langevin(const LangevinState& state0, const PotentialSpec& potential,
                             double sigma, const Eigen::VectorXd& grid, RngStream& rng) {
  check_grid(grid);
  if (!(state0.friction > 0.0)) throw Error(ErrorCode::parameter, "friction must be positive");
  if (!(sigma >= 0.0)) throw Error(ErrorCode::parameter, "sigma must be nonnegative");
  if (state0.position.size() != 2 || state0.velocity.size() != 2)
    throw Error(ErrorCode::parameter, "Langevin state must be 2-D");
  const double b = state0.friction;
  Eigen::MatrixXd path(grid.size(), 2);
  Eigen::Vector2d r = state0.position;
  Eigen::Vector2d v = state0.velocity;
  path.row(0) = r.transpose();
  for (Eigen::Index i = 0; i + 1 < grid.size(); ++i) {
    const double dt = grid(i + 1) - grid(i);
    const Eigen::Vector2d force = grad_potential(potential, Point(r));
    const Eigen::Vector2d z(rng.normal(), rng.normal());
    const Eigen::Vector2d r_next = r + v * dt;
    const Eigen::Vector2d v_next = v - b * v * dt - b * force * dt + sigma * std::sqrt(dt) * z;
    if (!r_next.allFinite() || !v_next.allFinite())
      throw Error(ErrorCode::divergence, "Langevin state is not finite at step " + std::to_string(i + 1));
    r = r_next;
    v = v_next;
    path.row(i + 1) = r.transpose();
  }
  return Trajectory(grid, std::move(path));
}

Eigen::VectorXd uniform_grid(double t0, double dt, Eigen::Index steps) {
  if (!(dt > 0.0) || steps < 1) throw Error(ErrorCode::parameter, "grid needs dt > 0 and steps >= 1");
  Eigen::VectorXd g(steps + 1);
  for (Eigen::Index i = 0; i <= steps; ++i) g(i) = t0 + static_cast<double>(i) * dt;
  return g;
}

}  // namespace stochdyn
