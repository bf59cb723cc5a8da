#include "stochdyn/raintravel.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "stochdyn/csv.hpp"
#include "stochdyn/error.hpp"
#include "stochdyn/optim.hpp"
#include "stochdyn/special.hpp"
#include "stochdyn/trajectory.hpp"

namespace stochdyn {

namespace {

void check_law(const TravelTimeLaw& law) {
  if (!(law.shape > 1.0) || !std::isfinite(law.shape))
    throw Error(ErrorCode::parameter, "Weibull shape must exceed 1 for a finite mean travel time");
  if (!(law.theta > 0.0) || !std::isfinite(law.theta))
    throw Error(ErrorCode::parameter, "travel-time scale must be positive");
}

}  // namespace

double TravelTimeLaw::mean() const {
  check_law(*this);
  return theta * std::tgamma(1.0 - 1.0 / shape);
}

TravelTimeLaw TravelTimeLaw::from_mean(double mu, double shape) {
  if (!(shape > 1.0)) throw Error(ErrorCode::parameter, "Weibull shape must exceed 1 for a finite mean travel time");
  if (!(mu > 0.0)) throw Error(ErrorCode::parameter, "mean travel time must be positive");
  return {mu / std::tgamma(1.0 - 1.0 / shape), shape};
}

double travel_time_cdf(double u, const TravelTimeLaw& law) {
  if (u <= 0.0) return 0.0;
  return std::exp(-std::pow(law.theta / u, law.shape));
}

double int_FU(double x, const TravelTimeLaw& law) {
  check_law(law);
  if (x < 0.0) throw Error(ErrorCode::parameter, "int_FU needs x >= 0");
  if (x == 0.0) return 0.0;
  const double s = law.shape;
  const double z = std::pow(law.theta / x, s);
  if (z > 745.0) return 0.0;  // e^-z underflows; the integral is below 1e-300
  if (z >= 1.0) return law.theta / s * special::upper_incomplete_gamma(-1.0 / s, z);
  return x * std::exp(-z) - law.theta * special::upper_incomplete_gamma(1.0 - 1.0 / s, z);
}

double rain_regression(double t, const RainModelParams& params, bool seeded) {
  if (!seeded) return params.alpha;
  const auto I = [&](double x) { return x > 0.0 ? int_FU(x, params.law) : 0.0; };
  const double a = params.seeding_start, b = params.seeding_end;
  if (t + 1.0 - a <= 0.0) return params.alpha;
  return params.alpha + params.beta * (I(t + 1.0 - a) - I(t - 2.0 - a) - I(t + 1.0 - b) + I(t - 2.0 - b));
}

Eigen::VectorXd rain_regression(const Eigen::VectorXd& t, const RainModelParams& params, bool seeded) {
  Eigen::VectorXd y(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) y(i) = rain_regression(t(i), params, seeded);
  return y;
}

RainCurve load_rain_curve(const std::filesystem::path& path) {
  const CsvTable table = read_csv_file(path);
  const int ct = table.column("t"), cs = table.column("y_seeded"), cu = table.column("y_unseeded");
  if (ct < 0 || cs < 0 || cu < 0)
    throw Error(ErrorCode::parse, path.string() + ": header must contain t,y_seeded,y_unseeded");
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  if (n < 5) throw Error(ErrorCode::insufficient_data, path.string() + ": too few rows for a rain fit");
  RainCurve c{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    if (row.fields.size() != table.header.size())
      throw Error(ErrorCode::parse, path.string() + ":" + std::to_string(row.line) + ": wrong field count");
    c.t(i) = parse_real(row.fields[static_cast<std::size_t>(ct)], path.string(), row.line);
    c.seeded(i) = parse_real(row.fields[static_cast<std::size_t>(cs)], path.string(), row.line);
    c.unseeded(i) = parse_real(row.fields[static_cast<std::size_t>(cu)], path.string(), row.line);
    if (i > 0 && !(c.t(i) > c.t(i - 1)))
      throw Error(ErrorCode::data, path.string() + ":" + std::to_string(row.line) + ": t must increase");
  }
  return c;
}

void write_rain_curve(std::ostream& out, const RainCurve& curve) {
  out << "t,y_seeded,y_unseeded\n";
  for (Eigen::Index i = 0; i < curve.t.size(); ++i)
    out << format_double(curve.t(i)) << ',' << format_double(curve.seeded(i)) << ','
        << format_double(curve.unseeded(i)) << '\n';
}

namespace {

RainModelParams unpack(const Eigen::VectorXd& x) {
  RainModelParams p;
  p.law = TravelTimeLaw::from_mean(x(0), x(1));
  p.alpha = x(2);
  p.beta = x(3);
  return p;
}

Eigen::VectorXd weighted_residuals(const RainCurve& c, const RainModelParams& p) {
  const Eigen::Index n = c.t.size();
  Eigen::VectorXd r(2 * n);
  const double ws = std::sqrt(c.n_seeded), wu = std::sqrt(c.n_unseeded);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i) = ws * (c.seeded(i) - rain_regression(c.t(i), p, true));
    r(n + i) = wu * (c.unseeded(i) - p.alpha);
  }
  return r;
}

}  // namespace

double rain_objective(const RainCurve& curve, const RainModelParams& params) {
  return weighted_residuals(curve, params).squaredNorm();
}

RainFit fit_rain(const RainCurve& curve, const RainFitOptions& options) {
  const Eigen::Index n = curve.t.size();
  if (curve.seeded.size() != n || curve.unseeded.size() != n)
    throw Error(ErrorCode::data, "seeded and unseeded curves must share the time grid");
  if (n < 5) throw Error(ErrorCode::insufficient_data, "too few hours for a rain fit");
  if (!(curve.n_seeded > 0.0) || !(curve.n_unseeded > 0.0))
    throw Error(ErrorCode::data, "replicate counts must be positive");

  LeastSquaresProblem problem;
  problem.residuals = [&](const Eigen::VectorXd& x) { return weighted_residuals(curve, unpack(x)); };
  const double span = curve.t.maxCoeff() - curve.t.minCoeff();
  problem.lower = Eigen::Vector4d(0.05, options.shape_lower, 0.0, 0.0);
  problem.upper = Eigen::Vector4d(std::max(span, 1.0), options.shape_upper, std::numeric_limits<double>::infinity(),
                                  std::numeric_limits<double>::infinity());
  const double alpha0 = curve.unseeded.mean();
  const double beta0 = std::max((curve.seeded.maxCoeff() - alpha0) / 3.0, 1e-3);
  problem.scale = Eigen::Vector4d(1.0, 1.0, std::max(std::abs(alpha0), 0.1), beta0);

  LmOptions lm;
  lm.max_iterations = options.max_iterations;
  const double mus[] = {2.0, 5.0, 10.0};
  const double shapes[] = {2.5, 6.0, 15.0};
  RainFit best;
  bool have = false;
  LmResult best_res;
  for (double mu0 : mus)
    for (double s0 : shapes) {
      Eigen::VectorXd x0 = Eigen::Vector4d(std::min(mu0, problem.upper(0)), s0, alpha0, beta0);
      const LmResult res = levenberg_marquardt(problem, x0, lm);
      if (!have || res.objective < best_res.objective) {
        best_res = res;
        have = true;
      }
    }

  best.params = unpack(best_res.x);
  best.mu = best_res.x(0);
  best.objective = best_res.objective;
  best.iterations = best_res.iterations;
  best.converged = best_res.converged;
  best.shape_at_boundary = best_res.at_bound(1);

  const double dof = static_cast<double>(2 * n - 4);
  const double sigma2 = best_res.objective / dof;
  const Eigen::MatrixXd& J = best_res.jacobian;
  const Eigen::Matrix4d info = J.transpose() * J;
  Eigen::FullPivLU<Eigen::Matrix4d> lu(info);
  if (lu.isInvertible()) {
    best.covariance = sigma2 * lu.inverse();
    best.se = best.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  } else {
    best.covariance.setConstant(std::numeric_limits<double>::quiet_NaN());
    best.se.setConstant(std::numeric_limits<double>::quiet_NaN());
  }
  if (!best.converged) {
    throw Error(ErrorCode::fit, "rain fit did not converge; best objective " + format_double(best.objective) +
                                    " at mu=" + format_double(best.mu));
  }
  return best;
}

std::pair<double, double> travel_time_ci(double mu, double se_mu) { return {mu - 2.0 * se_mu, mu + 2.0 * se_mu}; }

std::pair<double, double> travel_time_ci(const RainFit& fit) { return travel_time_ci(fit.mu, fit.se(0)); }

Eigen::VectorXd synthesize_rain(const RainModelParams& params, const Eigen::VectorXd& t,
                                const Eigen::VectorXd& unseeded) {
  if (unseeded.size() != t.size()) throw Error(ErrorCode::data, "residual pool length must equal the grid length");
  const Eigen::VectorXd fitted = rain_regression(t, params, true);
  return fitted + (unseeded.array() - unseeded.mean()).matrix();
}

}  // namespace stochdyn
