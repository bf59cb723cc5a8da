#pragma once

#include <filesystem>
#include <iosfwd>
#include <utility>

#include <Eigen/Dense>

namespace stochdyn {

/// Travel time U = theta / W with W Weibull(scale 1, shape s).
struct TravelTimeLaw {
  double theta = 1.0;
  double shape = 2.0;

  /// E U = theta Gamma(1 - 1/s); needs s > 1.
  double mean() const;
  static TravelTimeLaw from_mean(double mu, double shape);
};

/// F_U(u) = exp(-(theta/u)^s) for u > 0, 0 otherwise.
double travel_time_cdf(double u, const TravelTimeLaw& law);

/// Integral of F_U over [0, x]. Closed form through the upper incomplete gamma:
/// x F_U(x) - theta Gamma(1 - 1/s, z) = (theta/s) Gamma(-1/s, z), z = (theta/x)^s.
/// The second form is used for large z where the first cancels.
double int_FU(double x, const TravelTimeLaw& law);

struct RainModelParams {
  double alpha = 0.0;
  double beta = 0.0;
  TravelTimeLaw law;
  double seeding_start = 7.5;
  double seeding_end = 21.5;
};

/// Expected running mean of order 3 at hour t.
double rain_regression(double t, const RainModelParams& params, bool seeded);
Eigen::VectorXd rain_regression(const Eigen::VectorXd& t, const RainModelParams& params, bool seeded);

struct RainCurve {
  Eigen::VectorXd t;
  Eigen::VectorXd seeded;
  Eigen::VectorXd unseeded;
  double n_seeded = 53.0;
  double n_unseeded = 38.0;
};

RainCurve load_rain_curve(const std::filesystem::path& path);
void write_rain_curve(std::ostream& out, const RainCurve& curve);

struct RainFit {
  RainModelParams params;
  double mu = 0.0;
  /// Standard errors of (mu, s, alpha, beta).
  Eigen::Vector4d se = Eigen::Vector4d::Zero();
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  bool shape_at_boundary = false;
};

struct RainFitOptions {
  double shape_lower = 1.05;
  double shape_upper = 60.0;
  int max_iterations = 400;
};

/// Weighted LS: sum n_s (Y_s - E_seeded)^2 + n_u (Y_u - alpha)^2 over
/// (mu, s, alpha, beta). SEs from sigma^2 (J'J)^-1 with sigma^2 the weighted
/// RSS over n - 4.
RainFit fit_rain(const RainCurve& curve, const RainFitOptions& options = {});

double rain_objective(const RainCurve& curve, const RainModelParams& params);

/// mu +- 2 se, hours.
std::pair<double, double> travel_time_ci(double mu, double se_mu);
std::pair<double, double> travel_time_ci(const RainFit& fit);

/// Fitted seeded curve plus the centred unseeded fluctuations.
Eigen::VectorXd synthesize_rain(const RainModelParams& params, const Eigen::VectorXd& t,
                                const Eigen::VectorXd& unseeded);

}  // namespace stochdyn
