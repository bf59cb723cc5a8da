#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "stochdyn/geometry.hpp"
#include "stochdyn/rng.hpp"
#include "stochdyn/trajectory.hpp"

namespace stochdyn {

class PotentialSpec;

/// Drift mu(r, t): position and time to velocity. Must be a pure function.
using DriftField = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>;

/// Diffusion sigma(r, t): either an isotropic scalar (sigma * I) or a p x p matrix field.
class DiffusionSpec {
 public:
  using MatrixField = std::function<Eigen::MatrixXd(const Eigen::VectorXd&, double)>;

  DiffusionSpec(double sigma);  // NOLINT: implicit from a scalar is the common case
  explicit DiffusionSpec(MatrixField field);

  bool is_scalar() const noexcept { return std::holds_alternative<double>(form_); }
  double scalar() const { return std::get<double>(form_); }

  /// sigma(r, t) z, checked for finiteness.
  Eigen::VectorXd apply(const Eigen::VectorXd& r, double t, const Eigen::VectorXd& z) const;

 private:
  std::variant<double, MatrixField> form_;
};

struct OUParams {
  double alpha = 1.0;       // attraction rate, 1/time
  Eigen::VectorXd attractor;
  double sigma = 1.0;
};

/// Rejection resampling inside a region, with hold-previous after
/// `max_attempts` failed redraws. Points inside any excluded region (an island,
/// say) are rejected as well; boundary points of the outer region are allowed.
struct ConstraintPolicy {
  Region region;
  std::vector<Region> excluded{};
  int max_attempts = 100;

  bool allows(const Point& q) const;
};

struct LangevinState {
  Eigen::VectorXd position;
  Eigen::VectorXd velocity;
  double friction = 1.0;  // 1/time
};

struct SimulationStats {
  long rejections = 0;
  long fallbacks = 0;
};

/// One Euler step: r + mu(r,t) dt + sigma(r,t) z sqrt(dt).
Eigen::VectorXd euler_step(const Eigen::VectorXd& r, double t, double dt, const DriftField& drift,
                           const DiffusionSpec& diffusion, const Eigen::VectorXd& z);

/// Euler scheme over an explicit time grid; grid(0) is the time of r0.
Trajectory simulate_sde(const Eigen::VectorXd& r0, const Eigen::VectorXd& grid,
                        const DriftField& drift, const DiffusionSpec& diffusion, RngStream& rng,
                        const std::optional<ConstraintPolicy>& constraint = std::nullopt,
                        SimulationStats* stats = nullptr);

/// (r, t) -> alpha (a - r).
DriftField ou_drift(const OUParams& params);

/// (r, t) -> -grad H(r).
DriftField gradient_system_drift(const PotentialSpec& potential);

/// Second-order system dr = v dt, dv = -b v dt - b grad H dt + sigma dB, by the
/// same Euler discretization. Returns the position component.
Trajectory simulate_langevin(const LangevinState& state0, const PotentialSpec& potential,
                             double sigma, const Eigen::VectorXd& grid, RngStream& rng);

/// Evenly spaced grid t0, t0 + dt, ..., with `steps` steps.
Eigen::VectorXd uniform_grid(double t0, double dt, Eigen::Index steps);

}  // namespace stochdyn
