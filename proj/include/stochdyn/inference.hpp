#pragma once

#include <vector>

#include <Eigen/Dense>

#include "stochdyn/geometry.hpp"
#include "stochdyn/potential.hpp"
#include "stochdyn/rng.hpp"
#include "stochdyn/sde.hpp"
#include "stochdyn/trajectory.hpp"

namespace stochdyn {

/// Per-step start position r(t_i), increment r(t_{i+1}) - r(t_i) and duration.
struct IncrementSample {
  Eigen::VectorXd start_times;
  Eigen::MatrixXd starts;      // n x p
  Eigen::MatrixXd increments;  // n x p
  Eigen::VectorXd durations;   // all > 0

  Eigen::Index size() const noexcept { return durations.size(); }
  Eigen::Index dim() const noexcept { return starts.cols(); }
};

IncrementSample make_increments(const Trajectory& traj);

/// (1 / pI) sum_i |dr_i - mu(r_i) dt_i|^2 / dt_i.
double estimate_sigma2(const Trajectory& traj, const DriftField& drift_hat);
double estimate_sigma2(const IncrementSample& sample, const DriftField& drift_hat);

/// Zero drift in p dimensions.
DriftField zero_drift(Eigen::Index p);

struct PotentialFit {
  Eigen::Matrix<double, 5, 1> beta = Eigen::Matrix<double, 5, 1>::Zero();
  double shore_coefficient = 0.0;
  double sigma = 0.0;
  double rss = 0.0;
  Eigen::Index n = 0;
};

/// Least-squares fit of the polynomial-shore potential with the shore
/// coefficient C held fixed. Velocities dr/dt are regressed on the negated
/// basis gradients after adding back the known C * grad(1/d) term; both
/// coordinates are stacked into one ordinary least-squares problem. sigma is
/// then estimated from the increments about the fitted drift.
PotentialFit fit_potential_ls(const Trajectory& traj, const Region& shore, double shore_coefficient);
PotentialFit fit_potential_ls(const IncrementSample& sample, const Region& shore, double shore_coefficient);

/// The least-squares objective minimised by fit_potential_ls, at any beta.
double potential_ls_objective(const IncrementSample& sample, const Region& shore,
                              double shore_coefficient, const Eigen::Matrix<double, 5, 1>& beta);

PotentialSpec to_potential_spec(const PotentialFit& fit, const Region& shore);

/// Regular grid of square cells; cell (i, j) is centred at
/// origin + ((i + 0.5) cell, (j + 0.5) cell).
struct GridSpec {
  Point origin = Point::Zero();
  double cell = 1.0;
  int nx = 1;
  int ny = 1;

  Eigen::Index cells() const noexcept { return static_cast<Eigen::Index>(nx) * ny; }
  Point center(int i, int j) const {
    return origin + Point((i + 0.5) * cell, (j + 0.5) * cell);
  }
};

inline constexpr double kMinCellSupport = 5.0;

struct DriftFieldEstimate {
  GridSpec grid;
  double bandwidth = 0.0;
  Eigen::Matrix2Xd centers;
  Eigen::Matrix2Xd velocity;  // NaN where unsupported
  Eigen::VectorXd weight;     // total kernel weight, in units of increments
  Eigen::Array<bool, Eigen::Dynamic, 1> supported;
};

/// Nadaraya-Watson average of dr/dt at every cell centre with a Gaussian
/// kernel of the given bandwidth. Cells whose kernel weight is below
/// `min_support` increments are flagged empty.
DriftFieldEstimate estimate_drift_field(const std::vector<Trajectory>& trajs, const GridSpec& grid,
                                        double bandwidth, double min_support = kMinCellSupport);

/// Piecewise-linear positions at the query times (one row per query).
Eigen::MatrixXd interpolate_track(const Trajectory& track, const Eigen::VectorXd& query_times);

struct LaggedEffectCurve {
  double lag = 0.0;
  Eigen::VectorXd edges;
  Eigen::Matrix2Xd nu;         // mean residual velocity per bin
  Eigen::VectorXd nu_norm;     // |nu|, NaN for empty bins
  Eigen::VectorXi counts;
  Eigen::VectorXd null_level;  // 95th percentile of |nu| under circular shifts
  Eigen::Array<bool, Eigen::Dynamic, 1> empty;
  Eigen::Index used = 0;       // increments whose lagged covariate time is observed

  Eigen::Index bins() const noexcept { return edges.size() - 1; }
};

struct LaggedEffectOptions {
  int null_replicates = 199;
  double null_quantile = 0.95;
  int workers = 1;
};

/// Distance-binned mean of dr/dt - mu(r) against the distance from r(t_i) to
/// the covariate track at t_i - lag. Increments whose lagged time falls outside
/// the covariate track are skipped. The null level comes from refits against
/// circularly time-shifted copies of the covariate track, with shifts drawn
/// from `rng` in replicate order.
LaggedEffectCurve fit_lagged_effect(const Trajectory& subject, const Trajectory& covariate,
                                    double lag, const Eigen::VectorXd& edges, RngStream& rng,
                                    const LaggedEffectOptions& options = {},
                                    const DriftField* baseline = nullptr);

/// Linear-interpolation (type 7) quantile of unsorted values.
double quantile(std::vector<double> values, double q);

}  // namespace stochdyn
