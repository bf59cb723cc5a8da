#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stochdyn/csv.hpp"

namespace stochdyn {

/// Catch m_{t,a}: one row per age, one column per season.
struct SardineTable {
  std::vector<int> ages;
  std::vector<std::string> seasons;
  Eigen::MatrixXd catches;

  static SardineTable from_matrix(const LabelledMatrix& m);
  LabelledMatrix to_matrix() const;
  /// Row of the given age, or -1.
  int age_row(int age) const;
};

SardineTable load_sardine_table(const std::filesystem::path& path);

struct SardineFit {
  Eigen::VectorXd r;       // r_t for t = 1..T-1, r(0) == 1
  Eigen::VectorXd p_star;  // p*_a for a = a_lo..a_hi
  int age_lo = 0;
  int age_hi = 0;
  std::vector<std::string> seasons;  // label of season t for each r_t
  double rss = 0.0;                  // on the log scale
  Eigen::Index observations = 0;
};

inline constexpr int kSardineAgeLo = 3;
inline constexpr int kSardineAgeHi = 6;

/// OLS on log(m_{t+1,a+1} / m_{t,a}) = log r_t + log p*_a with log r_1 = 0.
SardineFit fit_sardine(const SardineTable& table, int age_lo = kSardineAgeLo, int age_hi = kSardineAgeHi);

/// Sum of squared log-ratio residuals for the given parameters.
double sardine_log_rss(const SardineTable& table, const SardineFit& fit);

/// One-step-ahead n_{t+1,a+1} = m_{t,a} r_t p*_a; cells outside the window are NaN.
SardineTable predict_sardine(const SardineTable& table, const SardineFit& fit);

}  // namespace stochdyn
