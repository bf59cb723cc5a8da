#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "stochdyn/error.hpp"
#include "stochdyn/rng.hpp"

namespace stochdyn {

/// Age- and density-dependent adult survival
///   p_{i,t} = (1 - alpha_i)(1 - beta N_t)(1 - gamma N_{t-1}),
/// each factor clamped to [0, 1]. Class A_max is terminal: its members leave
/// the population at the next step, so alpha for that class is not used.
struct BlowflyModel {
  Eigen::VectorXd alpha;  // per age class, 1..A_max
  double beta = 0.0;
  double gamma = 0.0;
  double sigma_f = 0.0;   // fluctuation scale for normal synthesis (sd = sigma_f N_t)

  Eigen::Index age_classes() const noexcept { return alpha.size(); }
};

inline constexpr int kDefaultAgeClasses = 18;

/// Adult totals N_t and emergences E_t on a 2-day step, t = 0..T-1.
struct BlowflySeries {
  Eigen::VectorXd adults;
  Eigen::VectorXd emerging;

  Eigen::Index size() const noexcept { return adults.size(); }
  /// D_t = N_{t-1} - N_t + E_t for t >= 1; entry 0 is NaN.
  Eigen::VectorXd deaths() const;
};

BlowflySeries load_blowfly_series(const std::filesystem::path& path);
void write_blowfly_series(std::ostream& out, const BlowflySeries& series);

/// Conditional expected counts m_{i,t}, one row per age class.
struct AgeStructuredState {
  Eigen::MatrixXd expected;  // A_max x T
  long clamp_events = 0;

  Eigen::VectorXd totals() const { return expected.colwise().sum().transpose(); }
};

double survival_prob(const BlowflyModel& model, Eigen::Index age_class, double adults_now,
                     double adults_prev, long* clamp_events = nullptr);

/// Runs the dynamic equation from the zero state: m_{1,t+1} = E_{t+1},
/// m_{i+1,t+1} = p_{i,t} m_{i,t}, driven by the observed N series.
AgeStructuredState blowfly_propagate(const BlowflyModel& model, const Eigen::VectorXd& emerging,
                                     const Eigen::VectorXd& adults);

/// sum_i q_{i,t} m_{i,t}, aligned with D: entry t+1 holds the deaths expected
/// in (t, t+1]; entry 0 is NaN.
Eigen::VectorXd expected_deaths(const BlowflyModel& model, const AgeStructuredState& state,
                                const Eigen::VectorXd& adults);

/// sum_t (D_{t+1} - sum_i q_{i,t} m_{i,t})^2 / N_t^2 over t with N_t > 0.
double blowfly_objective(const BlowflyModel& model, const BlowflySeries& series);

struct BlowflyFit {
  BlowflyModel model;
  double objective = 0.0;
  Eigen::Index terms = 0;
  int start_index = 0;
  int iterations = 0;
  bool converged = false;
  long clamp_events = 0;
};

struct BlowflyFitOptions {
  int age_classes = kDefaultAgeClasses;
  /// Upper bound for beta and gamma; <= 0 means 1 / max(N).
  double density_bound = 0.0;
  int max_iterations = 400;
};

/// Weighted least squares over theta = {alpha_1..alpha_{A-1}, beta, gamma}
/// with a fixed list of starting points; the winner is the lowest objective,
/// ties going to the earlier start.
BlowflyFit fit_blowfly(const BlowflySeries& series, const BlowflyFitOptions& options = {});

class BlowflyFitError : public Error {
 public:
  BlowflyFitError(const std::string& message, BlowflyFit best)
      : Error(ErrorCode::fit, message), best_(std::move(best)) {}
  const BlowflyFit& best() const noexcept { return best_; }

 private:
  BlowflyFit best_;
};

enum class DeathNoise { binomial, normal };

struct SynthesizedDeaths {
  Eigen::VectorXd deaths;  // entry 0 is 0
  long clamped = 0;        // normal mode: negative draws set to 0
};

/// Synthetic deaths driven by the observed (common stimulus) E and N series.
SynthesizedDeaths synthesize_deaths(const BlowflyModel& model, const Eigen::VectorXd& emerging,
                                    const Eigen::VectorXd& adults, DeathNoise mode, RngStream& rng);

/// Forward simulation of the adult population from the zero state. With no
/// stream the age classes evolve by their expectations; with one, survivors
/// are binomial draws (emergences are rounded to whole flies).
BlowflySeries simulate_blowfly(const BlowflyModel& model, const Eigen::VectorXd& emerging,
                               RngStream* rng = nullptr);

/// Forward simulation in which the model's own measurement equation is the
/// truth: each period's deaths are Sum_i Binomial(round(m_i), q_i) with m the
/// conditional expectations propagated from the simulated history, capped at
/// the current population. Unlike the cohort simulator above, the actual deaths
/// here are exchangeable (up to feedback through N) with synthesize_deaths draws.
BlowflySeries simulate_blowfly_conditional(const BlowflyModel& model, const Eigen::VectorXd& emerging,
                                           RngStream& rng);

}  // namespace stochdyn
