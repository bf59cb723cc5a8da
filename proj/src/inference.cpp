#include "stochdyn/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stochdyn/error.hpp"
#include "stochdyn/parallel.hpp"

namespace stochdyn {

IncrementSample make_increments(const Trajectory& traj) {
  const Eigen::Index n = traj.size() - 1;
  IncrementSample s;
  s.start_times = traj.times().head(n);
  s.starts = traj.positions().topRows(n);
  s.increments = traj.positions().bottomRows(n) - traj.positions().topRows(n);
  s.durations = traj.times().tail(n) - traj.times().head(n);
  return s;
}

DriftField zero_drift(Eigen::Index p) {
  return [p](const Eigen::VectorXd&, double) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(p); };
}

double estimate_sigma2(const IncrementSample& sample, const DriftField& drift_hat) {
  const Eigen::Index n = sample.size();
  if (n < 1) throw Error(ErrorCode::insufficient_data, "need at least one increment");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dt = sample.durations(i);
    if (!(dt > 0.0)) throw Error(ErrorCode::data, "increment duration must be positive");
    const Eigen::VectorXd r = sample.starts.row(i).transpose();
    const Eigen::VectorXd mu = drift_hat(r, sample.start_times(i));
    const Eigen::VectorXd resid = sample.increments.row(i).transpose() - mu * dt;
    sum += resid.squaredNorm() / dt;
  }
  return sum / (static_cast<double>(sample.dim()) * static_cast<double>(n));
}

double estimate_sigma2(const Trajectory& traj, const DriftField& drift_hat) {
  return estimate_sigma2(make_increments(traj), drift_hat);
}

namespace {

struct PotentialDesign {
  Eigen::MatrixXd x;  // 2n x 5
  Eigen::VectorXd y;  // 2n
};

PotentialDesign potential_design(const IncrementSample& sample, const Region& shore, double c) {
  if (sample.dim() != 2) throw Error(ErrorCode::data, "potential fitting needs 2-D positions");
  const Eigen::Index n = sample.size();
  PotentialDesign d{Eigen::MatrixXd(2 * n, 5), Eigen::VectorXd(2 * n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point q = sample.starts.row(i).transpose();
    if (point_in_region(shore, q) || region_distance(shore, q) < kShoreGuard)
      throw Error(ErrorCode::data, "position " + std::to_string(i) + " is not strictly off the shore");
    const double dt = sample.durations(i);
    if (!(dt > 0.0)) throw Error(ErrorCode::data, "increment duration must be positive");
    Eigen::Vector2d response = sample.increments.row(i).transpose() / dt;
    if (c != 0.0) response += c * inverse_distance_gradient(shore, q);
    d.x.middleRows<2>(2 * i) = -polynomial_basis_gradients<double>(q);
    d.y.segment<2>(2 * i) = response;
  }
  return d;
}

}  // namespace

double potential_ls_objective(const IncrementSample& sample, const Region& shore,
                              double shore_coefficient, const Eigen::Matrix<double, 5, 1>& beta) {
  const PotentialDesign d = potential_design(sample, shore, shore_coefficient);
  return (d.y - d.x * beta).squaredNorm();
}

PotentialFit fit_potential_ls(const IncrementSample& sample, const Region& shore,
                              double shore_coefficient) {
  if (sample.size() < 6)
    throw Error(ErrorCode::insufficient_data, "potential fit needs at least 6 increments");
  if (!(shore_coefficient >= 0.0)) throw Error(ErrorCode::parameter, "C must be nonnegative");
  const PotentialDesign d = potential_design(sample, shore, shore_coefficient);

  // Column scaling keeps the rank test meaningful when coordinates are large.
  const Eigen::VectorXd norms = d.x.colwise().norm().transpose().cwiseMax(1e-300);
  const Eigen::MatrixXd xs = d.x * norms.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
  qr.setThreshold(1e-10);
  if (qr.rank() < 5)
    throw Error(ErrorCode::identifiability,
                "potential design is rank deficient (rank " + std::to_string(qr.rank()) + ")");

  PotentialFit fit;
  fit.beta = qr.solve(d.y).cwiseQuotient(norms);
  fit.shore_coefficient = shore_coefficient;
  fit.rss = (d.y - d.x * fit.beta).squaredNorm();
  fit.n = sample.size();
  const PotentialSpec spec = to_potential_spec(fit, shore);
  fit.sigma = std::sqrt(estimate_sigma2(sample, gradient_system_drift(spec)));
  return fit;
}

PotentialFit fit_potential_ls(const Trajectory& traj, const Region& shore, double shore_coefficient) {
  return fit_potential_ls(make_increments(traj), shore, shore_coefficient);
}

PotentialSpec to_potential_spec(const PotentialFit& fit, const Region& shore) {
  return PotentialSpec(PolynomialShore{fit.beta, fit.shore_coefficient, shore});
}

DriftFieldEstimate estimate_drift_field(const std::vector<Trajectory>& trajs, const GridSpec& grid,
                                        double bandwidth, double min_support) {
  if (!(bandwidth > 0.0)) throw Error(ErrorCode::parameter, "bandwidth must be positive");
  if (trajs.empty()) throw Error(ErrorCode::insufficient_data, "need at least one trajectory");
  if (grid.nx < 1 || grid.ny < 1 || !(grid.cell > 0.0))
    throw Error(ErrorCode::parameter, "grid must have positive size");

  Eigen::Index total = 0;
  for (const auto& t : trajs) {
    if (t.dim() != 2) throw Error(ErrorCode::data, "drift field estimation needs 2-D trajectories");
    total += t.size() - 1;
  }
  Eigen::Matrix2Xd starts(2, total);
  Eigen::Matrix2Xd velocity(2, total);
  Eigen::Index k = 0;
  for (const auto& t : trajs) {
    const IncrementSample s = make_increments(t);
    for (Eigen::Index i = 0; i < s.size(); ++i, ++k) {
      starts.col(k) = s.starts.row(i).transpose();
      velocity.col(k) = s.increments.row(i).transpose() / s.durations(i);
    }
  }

  DriftFieldEstimate est;
  est.grid = grid;
  est.bandwidth = bandwidth;
  est.centers.resize(2, grid.cells());
  est.velocity.resize(2, grid.cells());
  est.weight.resize(grid.cells());
  est.supported.resize(grid.cells());
  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const Eigen::Index c = static_cast<Eigen::Index>(j) * grid.nx + i;
      const Point center = grid.center(i, j);
      const Eigen::VectorXd w =
          (-(starts.colwise() - center).colwise().squaredNorm().array() * inv2h2).exp().matrix().transpose();
      const double wsum = w.sum();
      est.centers.col(c) = center;
      est.weight(c) = wsum;
      est.supported(c) = wsum >= min_support;
      if (est.supported(c)) {
        est.velocity.col(c) = velocity * w / wsum;
      } else {
        est.velocity.col(c).setConstant(std::numeric_limits<double>::quiet_NaN());
      }
    }
  }
  return est;
}

namespace {

// Position on the track at time t, which must lie in [first, last].
Eigen::VectorXd interpolate_at(const Trajectory& track, double t) {
  const auto& times = track.times();
  const double* begin = times.data();
  const double* end = begin + times.size();
  const double* it = std::upper_bound(begin, end, t);
  Eigen::Index hi = std::min<Eigen::Index>(it - begin, times.size() - 1);
  Eigen::Index lo = hi - 1;
  if (hi == 0) {
    lo = 0;
    hi = 1;
  }
  const double t0 = times(lo), t1 = times(hi);
  if (t == t0) return track.position(lo);
  if (t == t1) return track.position(hi);
  const double w = (t - t0) / (t1 - t0);
  return (1.0 - w) * track.position(lo) + w * track.position(hi);
}

}  // namespace

Eigen::MatrixXd interpolate_track(const Trajectory& track, const Eigen::VectorXd& query_times) {
  const double first = track.times()(0);
  const double last = track.times()(track.size() - 1);
  Eigen::MatrixXd out(query_times.size(), track.dim());
  for (Eigen::Index i = 0; i < query_times.size(); ++i) {
    const double t = query_times(i);
    if (!(t >= first && t <= last))
      throw Error(ErrorCode::extrapolation, "query time " + format_double(t) + " is outside [" +
                                                format_double(first) + ", " + format_double(last) + "]");
    out.row(i) = interpolate_at(track, t).transpose();
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

struct BinnedMeans {
  Eigen::Matrix2Xd sum;
  Eigen::VectorXi counts;
};

Eigen::Index bin_of(const Eigen::VectorXd& edges, double d) {
  const Eigen::Index bins = edges.size() - 1;
  if (d < edges(0) || d > edges(bins)) return -1;
  const double* begin = edges.data();
  const double* it = std::upper_bound(begin, begin + edges.size(), d);
  return std::min<Eigen::Index>(it - begin - 1, bins - 1);
}

BinnedMeans bin_residuals(const Eigen::Matrix2Xd& starts, const Eigen::Matrix2Xd& residuals,
                          const Eigen::Matrix2Xd& covariate_at, const Eigen::VectorXd& edges) {
  const Eigen::Index bins = edges.size() - 1;
  BinnedMeans b{Eigen::Matrix2Xd::Zero(2, bins), Eigen::VectorXi::Zero(bins)};
  for (Eigen::Index i = 0; i < starts.cols(); ++i) {
    const Eigen::Index k = bin_of(edges, (starts.col(i) - covariate_at.col(i)).norm());
    if (k < 0) continue;
    b.sum.col(k) += residuals.col(i);
    ++b.counts(k);
  }
  return b;
}

}  // namespace

LaggedEffectCurve fit_lagged_effect(const Trajectory& subject, const Trajectory& covariate,
                                    double lag, const Eigen::VectorXd& edges, RngStream& rng,
                                    const LaggedEffectOptions& options, const DriftField* baseline) {
  if (!(lag >= 0.0)) throw Error(ErrorCode::parameter, "lag must be nonnegative");
  if (edges.size() < 2) throw Error(ErrorCode::parameter, "need at least one distance bin");
  for (Eigen::Index i = 1; i < edges.size(); ++i)
    if (!(edges(i) > edges(i - 1))) throw Error(ErrorCode::parameter, "bin edges must increase");
  if (subject.dim() != 2 || covariate.dim() != 2)
    throw Error(ErrorCode::data, "lagged effect needs 2-D tracks");
  if (options.null_replicates < 1) throw Error(ErrorCode::parameter, "need at least one null replicate");

  const IncrementSample inc = make_increments(subject);
  const double c_first = covariate.times()(0);
  const double c_last = covariate.times()(covariate.size() - 1);
  const double span = c_last - c_first;

  std::vector<Eigen::Index> used;
  for (Eigen::Index i = 0; i < inc.size(); ++i) {
    const double tl = inc.start_times(i) - lag;
    if (tl >= c_first && tl <= c_last) used.push_back(i);
  }
  if (used.empty())
    throw Error(ErrorCode::insufficient_data, "no subject increment has an observed lagged covariate");

  const auto m = static_cast<Eigen::Index>(used.size());
  Eigen::Matrix2Xd starts(2, m), resid(2, m), cov_now(2, m);
  Eigen::VectorXd lagged_times(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index i = used[static_cast<std::size_t>(k)];
    const Eigen::Vector2d r = inc.starts.row(i).transpose();
    Eigen::Vector2d v = inc.increments.row(i).transpose() / inc.durations(i);
    if (baseline) v -= (*baseline)(r, inc.start_times(i));
    starts.col(k) = r;
    resid.col(k) = v;
    lagged_times(k) = inc.start_times(i) - lag;
    cov_now.col(k) = interpolate_at(covariate, lagged_times(k));
  }

  const Eigen::Index bins = edges.size() - 1;
  LaggedEffectCurve curve;
  curve.lag = lag;
  curve.edges = edges;
  curve.used = m;
  const BinnedMeans actual = bin_residuals(starts, resid, cov_now, edges);
  curve.counts = actual.counts;
  curve.nu.resize(2, bins);
  curve.nu_norm.resize(bins);
  curve.empty.resize(bins);
  for (Eigen::Index k = 0; k < bins; ++k) {
    curve.empty(k) = actual.counts(k) == 0;
    if (curve.empty(k)) {
      curve.nu.col(k).setConstant(std::numeric_limits<double>::quiet_NaN());
      curve.nu_norm(k) = std::numeric_limits<double>::quiet_NaN();
    } else {
      curve.nu.col(k) = actual.sum.col(k) / actual.counts(k);
      curve.nu_norm(k) = curve.nu.col(k).norm();
    }
  }

  // Shifts are drawn up front so the replicate results do not depend on the
  // order in which workers pick them up.
  const auto reps = static_cast<std::size_t>(options.null_replicates);
  std::vector<double> shifts(reps);
  for (auto& s : shifts) s = span * (0.1 + 0.8 * rng.uniform());
  Eigen::MatrixXd null_norms(bins, static_cast<Eigen::Index>(reps));
  parallel_for(reps, options.workers, [&](std::size_t r) {
    Eigen::Matrix2Xd cov_shift(2, m);
    for (Eigen::Index k = 0; k < m; ++k) {
      double u = std::fmod(lagged_times(k) - c_first + shifts[r], span);
      if (u < 0.0) u += span;
      cov_shift.col(k) = interpolate_at(covariate, c_first + u);
    }
    const BinnedMeans b = bin_residuals(starts, resid, cov_shift, edges);
    for (Eigen::Index k = 0; k < bins; ++k)
      null_norms(k, static_cast<Eigen::Index>(r)) =
          b.counts(k) > 0 ? (b.sum.col(k) / b.counts(k)).norm() : std::numeric_limits<double>::quiet_NaN();
  });
  curve.null_level.resize(bins);
  for (Eigen::Index k = 0; k < bins; ++k) {
    std::vector<double> vals;
    for (Eigen::Index r = 0; r < null_norms.cols(); ++r)
      if (!std::isnan(null_norms(k, r))) vals.push_back(null_norms(k, r));
    curve.null_level(k) = quantile(std::move(vals), options.null_quantile);
  }
  return curve;
}

}  // namespace stochdyn
