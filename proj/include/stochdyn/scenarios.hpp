#pragma once

// Synthetic data generators shared by the fixture builder, the CLI and the
// tests. Nothing here is an estimator; these are the planted "truths".

#include <Eigen/Dense>

#include "stochdyn/blowfly.hpp"
#include "stochdyn/cluster.hpp"
#include "stochdyn/geometry.hpp"
#include "stochdyn/inference.hpp"
#include "stochdyn/raintravel.hpp"
#include "stochdyn/rng.hpp"
#include "stochdyn/trajectory.hpp"

namespace stochdyn::scenarios {

// --- seal ---------------------------------------------------------------
// Local km frame; the island's west tip sits near (160, 100).

Region island_outline();
Region bank_outline();

inline constexpr double kSealSigma = 4.64;
inline constexpr double kSealShoreC = 7.5;
inline constexpr int kSealPoints = 142;

/// The published quadratic coefficients (a saddle-free maximum).
Eigen::Matrix<double, 5, 1> published_seal_beta();
/// Same surface with the sign flipped, so -grad H attracts.
Eigen::Matrix<double, 5, 1> attracting_seal_beta();

/// Irregularly sampled positions (gaps of 2 to 6 h) of an animal held near
/// (146, 94) by a linear pull, kept inside the bank and off the island.
Trajectory seal_design_path(RngStream& rng, int points = kSealPoints);

/// Increments dr = -grad H(r_i) dt_i + sigma sqrt(dt_i) z_i at the design
/// positions; sigma = 0 gives exact drift increments.
IncrementSample regenerate_increments(const Trajectory& design, const PotentialSpec& potential,
                                      double sigma, RngStream& rng);

/// Gradient-system path under the attracting surface with Argos-like labels:
/// most fixes carry classes 1-3; about a fifth are 0/A/B with extra error.
Trajectory seal_track_with_labels(RngStream& rng, int points = 400);

// --- elk and ATV ------------------------------------------------------------

struct ElkScenario {
  Rect pasture{0.0, 0.0, 6.0, 6.0};
  double sigma = 1.0;         // km / sqrt(h)
  double repulsion = 6.0;     // km / h, away from the lagged ATV position
  double radius = 1.0;        // km
  double lag = 10.0 / 60.0;   // h
  double dt = 5.0 / 60.0;     // h
  double days = 56.0;
  double road_x = 0.2;
  double road_lo = 0.5, road_hi = 5.5;
  double speed = 12.0;        // km / h
  double shift_start = 8.0, shift_end = 16.0;  // hours of the day on the road
  Eigen::Vector2d parked{-20.0, 3.0};
};

Eigen::Vector2d atv_position(const ElkScenario& s, double t);
/// ATV positions every minute over the scenario span.
Trajectory atv_track(const ElkScenario& s);
Eigen::Vector2d elk_drift(const ElkScenario& s, const Eigen::Vector2d& r, double t);
Trajectory simulate_elk(const ElkScenario& s, RngStream& rng);
Region pasture_region(const ElkScenario& s);

// --- blowflies --------------------------------------------------------------

BlowflyModel reference_blowfly_model(int age_classes = kDefaultAgeClasses);
/// Periodic emergence series, whole flies.
Eigen::VectorXd reference_emergence(Eigen::Index steps);

// --- rain --------------------------------------------------------------------

RainModelParams published_rain_params();

/// Seeded and unseeded curves on the hourly grid from the model, with
/// independent normal noise of the given sd on each curve.
RainCurve synthetic_rain_curve(const RainModelParams& params, const Eigen::VectorXd& hours, double noise_sd,
                               RngStream& rng);

}  // namespace stochdyn::scenarios
