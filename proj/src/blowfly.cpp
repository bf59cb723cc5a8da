#include "stochdyn/blowfly.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "stochdyn/csv.hpp"
#include "stochdyn/optim.hpp"
#include "stochdyn/trajectory.hpp"

namespace stochdyn {

Eigen::VectorXd BlowflySeries::deaths() const {
  Eigen::VectorXd d(size());
  if (size() == 0) return d;
  d(0) = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index t = 1; t < size(); ++t) d(t) = adults(t - 1) - adults(t) + emerging(t);
  return d;
}

BlowflySeries load_blowfly_series(const std::filesystem::path& path) {
  const CsvTable table = read_csv_file(path);
  const int ct = table.column("t"), cn = table.column("N"), ce = table.column("E");
  if (ct < 0 || cn < 0 || ce < 0) throw Error(ErrorCode::parse, path.string() + ": header must be t,N,E");
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  BlowflySeries s{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  double prev_t = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    if (row.fields.size() != table.header.size())
      throw Error(ErrorCode::parse, path.string() + ":" + std::to_string(row.line) + ": wrong field count");
    const double t = parse_real(row.fields[static_cast<std::size_t>(ct)], path.string(), row.line);
    if (!(t > prev_t)) throw Error(ErrorCode::data, path.string() + ":" + std::to_string(row.line) + ": t must increase");
    prev_t = t;
    s.adults(i) = parse_real(row.fields[static_cast<std::size_t>(cn)], path.string(), row.line);
    s.emerging(i) = parse_real(row.fields[static_cast<std::size_t>(ce)], path.string(), row.line);
    if (s.adults(i) < 0.0 || s.emerging(i) < 0.0)
      throw Error(ErrorCode::data, path.string() + ":" + std::to_string(row.line) + ": counts must be nonnegative");
  }
  return s;
}

void write_blowfly_series(std::ostream& out, const BlowflySeries& series) {
  out << "t,N,E\n";
  for (Eigen::Index t = 0; t < series.size(); ++t)
    out << t << ',' << format_double(series.adults(t)) << ',' << format_double(series.emerging(t)) << '\n';
}

namespace {

double clamp01(double v, long* events) {
  if (v < 0.0 || v > 1.0) {
    if (events) ++*events;
    return v < 0.0 ? 0.0 : 1.0;
  }
  return v;
}

void check_series(const Eigen::VectorXd& emerging, const Eigen::VectorXd& adults) {
  if (emerging.size() != adults.size()) throw Error(ErrorCode::data, "E and N series differ in length");
  if ((emerging.array() < 0.0).any() || (adults.array() < 0.0).any() || !emerging.allFinite() ||
      !adults.allFinite())
    throw Error(ErrorCode::data, "E and N must be finite and nonnegative");
}

void check_model(const BlowflyModel& model) {
  if (model.age_classes() < 2) throw Error(ErrorCode::parameter, "need at least 2 age classes");
}

}  // namespace

double survival_prob(const BlowflyModel& model, Eigen::Index age_class, double adults_now,
                     double adults_prev, long* clamp_events) {
  if (age_class < 1 || age_class > model.age_classes())
    throw Error(ErrorCode::parameter, "age class out of range");
  return clamp01(1.0 - model.alpha(age_class - 1), clamp_events) *
         clamp01(1.0 - model.beta * adults_now, clamp_events) *
         clamp01(1.0 - model.gamma * adults_prev, clamp_events);
}

AgeStructuredState blowfly_propagate(const BlowflyModel& model, const Eigen::VectorXd& emerging,
                                     const Eigen::VectorXd& adults) {
  check_model(model);
  check_series(emerging, adults);
  const Eigen::Index a = model.age_classes();
  const Eigen::Index len = adults.size();
  AgeStructuredState s;
  s.expected = Eigen::MatrixXd::Zero(a, len);
  for (Eigen::Index t = 0; t + 1 < len; ++t) {
    const double prev = t > 0 ? adults(t - 1) : 0.0;
    s.expected(0, t + 1) = emerging(t + 1);
    for (Eigen::Index i = 0; i + 1 < a; ++i)
      s.expected(i + 1, t + 1) =
          survival_prob(model, i + 1, adults(t), prev, &s.clamp_events) * s.expected(i, t);
  }
  return s;
}

Eigen::VectorXd expected_deaths(const BlowflyModel& model, const AgeStructuredState& state,
                                const Eigen::VectorXd& adults) {
  const Eigen::Index a = model.age_classes();
  const Eigen::Index len = adults.size();
  Eigen::VectorXd out(len);
  out(0) = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index t = 0; t + 1 < len; ++t) {
    const double prev = t > 0 ? adults(t - 1) : 0.0;
    double d = state.expected(a - 1, t);
    for (Eigen::Index i = 0; i + 1 < a; ++i)
      d += (1.0 - survival_prob(model, i + 1, adults(t), prev)) * state.expected(i, t);
    out(t + 1) = d;
  }
  return out;
}

namespace {

// Residuals (D_{t+1} - expected) / N_t on the fitted range.
Eigen::VectorXd weighted_residuals(const BlowflyModel& model, const BlowflySeries& series) {
  const AgeStructuredState state = blowfly_propagate(model, series.emerging, series.adults);
  const Eigen::VectorXd expected = expected_deaths(model, state, series.adults);
  const Eigen::VectorXd observed = series.deaths();
  std::vector<double> r;
  r.reserve(static_cast<std::size_t>(series.size()));
  bool started = false;
  for (Eigen::Index t = 0; t + 1 < series.size(); ++t) {
    const double n = series.adults(t);
    if (n <= 0.0) {
      if (started) throw Error(ErrorCode::data, "N_t = 0 inside the fitted range at t = " + std::to_string(t));
      continue;
    }
    started = true;
    r.push_back((observed(t + 1) - expected(t + 1)) / n);
  }
  return Eigen::Map<Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
}

}  // namespace

double blowfly_objective(const BlowflyModel& model, const BlowflySeries& series) {
  return weighted_residuals(model, series).squaredNorm();
}

BlowflyFit fit_blowfly(const BlowflySeries& series, const BlowflyFitOptions& options) {
  const int a = options.age_classes;
  if (a < 2) throw Error(ErrorCode::parameter, "need at least 2 age classes");
  check_series(series.emerging, series.adults);
  if (series.size() < a + 5)
    throw Error(ErrorCode::insufficient_data, "series must be at least A_max + 5 long");
  const double nmax = series.adults.maxCoeff();
  if (!(nmax > 0.0)) throw Error(ErrorCode::data, "adult series is identically zero");
  const double bound = options.density_bound > 0.0 ? options.density_bound : 1.0 / nmax;

  const Eigen::Index np = a + 1;  // alpha_1..alpha_{A-1}, beta, gamma
  auto unpack = [a](const Eigen::VectorXd& theta) {
    BlowflyModel m;
    m.alpha.resize(a);
    m.alpha.head(a - 1) = theta.head(a - 1);
    m.alpha(a - 1) = 1.0;
    m.beta = theta(a - 1);
    m.gamma = theta(a);
    return m;
  };

  LeastSquaresProblem problem;
  problem.residuals = [&](const Eigen::VectorXd& theta) { return weighted_residuals(unpack(theta), series); };
  problem.lower = Eigen::VectorXd::Zero(np);
  problem.upper = Eigen::VectorXd::Ones(np);
  problem.upper.tail(2).setConstant(bound);
  problem.scale = Eigen::VectorXd::Constant(np, 0.1);
  problem.scale.tail(2).setConstant(0.1 * bound);

  struct Start {
    double alpha, beta, gamma;
  };
  const std::vector<Start> starts{{0.1, 0.25, 0.25}, {0.3, 0.0, 0.0}, {0.05, 0.5, 0.0}, {0.2, 0.0, 0.5}};

  LmOptions lm;
  lm.max_iterations = options.max_iterations;
  BlowflyFit best;
  bool have = false;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    Eigen::VectorXd x0(np);
    x0.head(a - 1).setConstant(starts[s].alpha);
    x0(a - 1) = starts[s].beta * bound;
    x0(a) = starts[s].gamma * bound;
    const LmResult res = levenberg_marquardt(problem, x0, lm);
    if (!have || res.objective < best.objective) {
      best.model = unpack(res.x);
      best.objective = res.objective;
      best.terms = res.residuals.size();
      best.start_index = static_cast<int>(s);
      best.iterations = res.iterations;
      best.converged = res.converged;
      have = true;
    }
  }
  const double dof = static_cast<double>(best.terms - np);
  best.model.sigma_f = dof > 0.0 ? std::sqrt(best.objective / dof) : 0.0;
  best.clamp_events = blowfly_propagate(best.model, series.emerging, series.adults).clamp_events;
  if (!best.converged)
    throw BlowflyFitError("blowfly fit did not converge within " + std::to_string(options.max_iterations) +
                              " iterations",
                          best);
  return best;
}

SynthesizedDeaths synthesize_deaths(const BlowflyModel& model, const Eigen::VectorXd& emerging,
                                    const Eigen::VectorXd& adults, DeathNoise mode, RngStream& rng) {
  const AgeStructuredState state = blowfly_propagate(model, emerging, adults);
  const Eigen::Index a = model.age_classes();
  const Eigen::Index len = adults.size();
  SynthesizedDeaths out{Eigen::VectorXd::Zero(len), 0};
  for (Eigen::Index t = 0; t + 1 < len; ++t) {
    const double prev = t > 0 ? adults(t - 1) : 0.0;
    double d = 0.0;
    if (mode == DeathNoise::binomial) {
      for (Eigen::Index i = 0; i < a; ++i) {
        const double q = i + 1 < a ? 1.0 - survival_prob(model, i + 1, adults(t), prev) : 1.0;
        const auto n = static_cast<std::int64_t>(std::llround(state.expected(i, t)));
        d += static_cast<double>(rng.binomial(n, q));
      }
    } else {
      double mean = state.expected(a - 1, t);
      for (Eigen::Index i = 0; i + 1 < a; ++i)
        mean += (1.0 - survival_prob(model, i + 1, adults(t), prev)) * state.expected(i, t);
      d = mean + model.sigma_f * adults(t) * rng.normal();
      if (d < 0.0) {
        d = 0.0;
        ++out.clamped;
      }
    }
    out.deaths(t + 1) = d;
  }
  return out;
}

BlowflySeries simulate_blowfly(const BlowflyModel& model, const Eigen::VectorXd& emerging,
                               RngStream* rng) {
  check_model(model);
  if ((emerging.array() < 0.0).any()) throw Error(ErrorCode::data, "emergences must be nonnegative");
  const Eigen::Index a = model.age_classes();
  const Eigen::Index len = emerging.size();
  BlowflySeries s{Eigen::VectorXd::Zero(len), emerging};
  if (rng) s.emerging = emerging.array().round().matrix();
  Eigen::VectorXd ages = Eigen::VectorXd::Zero(a);
  for (Eigen::Index t = 0; t + 1 < len; ++t) {
    const double prev = t > 0 ? s.adults(t - 1) : 0.0;
    Eigen::VectorXd next = Eigen::VectorXd::Zero(a);
    next(0) = s.emerging(t + 1);
    for (Eigen::Index i = 0; i + 1 < a; ++i) {
      const double p = survival_prob(model, i + 1, s.adults(t), prev);
      next(i + 1) = rng ? static_cast<double>(rng->binomial(static_cast<std::int64_t>(ages(i)), p))
                        : p * ages(i);
    }
    ages = next;
    s.adults(t + 1) = ages.sum();
  }
  return s;
}

BlowflySeries simulate_blowfly_conditional(const BlowflyModel& model, const Eigen::VectorXd& emerging,
                                           RngStream& rng) {
  check_model(model);
  if ((emerging.array() < 0.0).any()) throw Error(ErrorCode::data, "emergences must be nonnegative");
  const Eigen::Index a = model.age_classes();
  const Eigen::Index len = emerging.size();
  BlowflySeries s{Eigen::VectorXd::Zero(len), emerging.array().round().matrix()};
  Eigen::VectorXd m = Eigen::VectorXd::Zero(a);
  for (Eigen::Index t = 0; t + 1 < len; ++t) {
    const double prev = t > 0 ? s.adults(t - 1) : 0.0;
    Eigen::VectorXd next = Eigen::VectorXd::Zero(a);
    next(0) = s.emerging(t + 1);
    double d = 0.0;
    for (Eigen::Index i = 0; i < a; ++i) {
      const double p = i + 1 < a ? survival_prob(model, i + 1, s.adults(t), prev) : 0.0;
      d += static_cast<double>(rng.binomial(std::llround(m(i)), 1.0 - p));
      if (i + 1 < a) next(i + 1) = p * m(i);
    }
    m = next;
    s.adults(t + 1) = s.adults(t) + s.emerging(t + 1) - std::min(d, s.adults(t));
  }
  return s;
}

}  // namespace stochdyn
