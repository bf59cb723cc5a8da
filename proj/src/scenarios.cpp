#include "stochdyn/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "stochdyn/error.hpp"
#include "stochdyn/potential.hpp"
#include "stochdyn/sde.hpp"

namespace stochdyn::scenarios {

Region island_outline() {
  return Region::from_points({{160.0, 100.0}, {170.0, 93.0}, {200.0, 92.0}, {215.0, 96.0},
                              {212.0, 104.0}, {185.0, 106.0}, {168.0, 105.0}});
}

Region bank_outline() {
  return Region::from_points({{105.0, 55.0}, {180.0, 55.0}, {185.0, 120.0}, {120.0, 130.0}, {100.0, 100.0}});
}

Eigen::Matrix<double, 5, 1> published_seal_beta() {
  Eigen::Matrix<double, 5, 1> b;
  b << 93.53, 8.00, -0.47, 0.47, -0.41;
  return b;
}

Eigen::Matrix<double, 5, 1> attracting_seal_beta() { return -published_seal_beta(); }

Trajectory seal_design_path(RngStream& rng, int points) {
  if (points < 2) throw Error(ErrorCode::parameter, "need at least 2 design points");
  std::vector<double> times{0.0};
  for (int i = 1; i < points; ++i) times.push_back(times.back() + rng.uniform(2.0, 6.0));
  const Eigen::VectorXd grid = Eigen::Map<Eigen::VectorXd>(times.data(), points);
  OUParams ou{0.05, Eigen::Vector2d(146.0, 94.0), 4.64};
  ConstraintPolicy keep{bank_outline(), {island_outline()}};
  return simulate_sde(Eigen::Vector2d(146.0, 94.0), grid, ou_drift(ou), ou.sigma, rng, keep);
}

IncrementSample regenerate_increments(const Trajectory& design, const PotentialSpec& potential,
                                      double sigma, RngStream& rng) {
  IncrementSample s = make_increments(design);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const Point q = s.starts.row(i).transpose();
    const double dt = s.durations(i);
    const Eigen::Vector2d z = rng.normal_vector(2);
    s.increments.row(i) = (-grad_potential(potential, q) * dt + sigma * std::sqrt(dt) * z).transpose();
  }
  return s;
}

Trajectory seal_track_with_labels(RngStream& rng, int points) {
  const PotentialSpec attract = PolynomialShore{attracting_seal_beta(), kSealShoreC, island_outline()};
  std::vector<double> times{0.0};
  for (int i = 1; i < points; ++i) times.push_back(times.back() + rng.uniform(1.0, 4.0));
  // fine inner grid: near the shore the repulsion is hundreds of km/h, and a
  // coarse Euler step there overshoots out of the bank on every redraw
  std::vector<double> fine;
  std::vector<Eigen::Index> fix_index;
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const int sub = static_cast<int>(std::ceil((times[i + 1] - times[i]) / 0.01));
    fix_index.push_back(static_cast<Eigen::Index>(fine.size()));
    for (int k = 0; k < sub; ++k) fine.push_back(times[i] + (times[i + 1] - times[i]) * k / sub);
  }
  fix_index.push_back(static_cast<Eigen::Index>(fine.size()));
  fine.push_back(times.back());
  const Eigen::VectorXd grid = Eigen::Map<Eigen::VectorXd>(fine.data(), static_cast<Eigen::Index>(fine.size()));
  ConstraintPolicy keep{bank_outline(), {island_outline()}};
  const Trajectory path =
      simulate_sde(Eigen::Vector2d(146.0, 94.0), grid, gradient_system_drift(attract), kSealSigma, rng, keep);

  static const char* good[] = {"3", "2", "1"};
  static const char* poor[] = {"0", "A", "B"};
  Eigen::MatrixXd pos(points, 2);
  std::vector<std::string> labels;
  for (int i = 0; i < points; ++i) {
    pos.row(i) = path.positions().row(fix_index[static_cast<std::size_t>(i)]);
    if (rng.uniform() < 0.2) {
      labels.emplace_back(poor[rng.next_u64() % 3]);
      pos.row(i) += (8.0 * rng.normal_vector(2)).transpose();
    } else {
      labels.emplace_back(good[rng.next_u64() % 3]);
    }
  }
  const Eigen::VectorXd t = Eigen::Map<Eigen::VectorXd>(times.data(), points);
  return Trajectory(t, pos, labels);
}

Eigen::Vector2d atv_position(const ElkScenario& s, double t) {
  const double hour = std::fmod(t, 24.0);
  if (hour < s.shift_start || hour >= s.shift_end) return s.parked;
  const double len = s.road_hi - s.road_lo;
  double u = std::fmod((hour - s.shift_start) * s.speed, 2.0 * len);
  if (u > len) u = 2.0 * len - u;
  return {s.road_x, s.road_lo + u};
}

Trajectory atv_track(const ElkScenario& s) {
  const auto steps = static_cast<Eigen::Index>(std::llround(s.days * 24.0 * 60.0));
  const Eigen::VectorXd t = uniform_grid(0.0, 1.0 / 60.0, steps);
  Eigen::MatrixXd pos(t.size(), 2);
  for (Eigen::Index i = 0; i < t.size(); ++i) pos.row(i) = atv_position(s, t(i)).transpose();
  return Trajectory(t, pos);
}

Eigen::Vector2d elk_drift(const ElkScenario& s, const Eigen::Vector2d& r, double t) {
  const Eigen::Vector2d away = r - atv_position(s, t - s.lag);
  const double d = away.norm();
  if (d >= s.radius || d == 0.0) return Eigen::Vector2d::Zero();
  return s.repulsion * away / d;
}

Region pasture_region(const ElkScenario& s) {
  return Region::rectangle(s.pasture.xmin, s.pasture.ymin, s.pasture.xmax, s.pasture.ymax);
}

Trajectory simulate_elk(const ElkScenario& s, RngStream& rng) {
  const auto steps = static_cast<Eigen::Index>(std::llround(s.days * 24.0 / s.dt));
  const Eigen::VectorXd grid = uniform_grid(0.0, s.dt, steps);
  const Eigen::Vector2d start(0.5 * (s.pasture.xmin + s.pasture.xmax), 0.5 * (s.pasture.ymin + s.pasture.ymax));
  DriftField drift = [s](const Eigen::VectorXd& r, double t) -> Eigen::VectorXd {
    return elk_drift(s, Eigen::Vector2d(r(0), r(1)), t);
  };
  return simulate_sde(start, grid, drift, s.sigma, rng, ConstraintPolicy{pasture_region(s)});
}

BlowflyModel reference_blowfly_model(int age_classes) {
  BlowflyModel m;
  m.alpha.resize(age_classes);
  for (int i = 0; i < age_classes; ++i) m.alpha(i) = 0.04 + 0.015 * i;
  m.alpha(age_classes - 1) = 1.0;
  m.beta = 1.2e-4;
  m.gamma = 6e-5;
  m.sigma_f = 0.05;
  return m;
}

Eigen::VectorXd reference_emergence(Eigen::Index steps) {
  Eigen::VectorXd e(steps);
  for (Eigen::Index t = 0; t < steps; ++t)
    e(t) = std::round(500.0 + 350.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 19.0) +
                      120.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 7.3));
  return e;
}

RainModelParams published_rain_params() {
  RainModelParams p;
  p.law = TravelTimeLaw::from_mean(4.78, 6.68);
  p.alpha = 0.24;
  p.beta = 1.69;
  return p;
}

RainCurve synthetic_rain_curve(const RainModelParams& params, const Eigen::VectorXd& hours, double noise_sd,
                               RngStream& rng) {
  RainCurve c{hours, rain_regression(hours, params, true),
              Eigen::VectorXd::Constant(hours.size(), params.alpha)};
  for (Eigen::Index i = 0; i < hours.size(); ++i) {
    c.seeded(i) += noise_sd * rng.normal();
    c.unseeded(i) += noise_sd * rng.normal();
  }
  return c;
}

}  // namespace stochdyn::scenarios
