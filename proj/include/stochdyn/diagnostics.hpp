#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stochdyn/csv.hpp"

namespace stochdyn {

struct WedgeData {
  Eigen::VectorXd mean;     // (x + y) / 2
  Eigen::VectorXd diff;     // x - y
  Eigen::VectorXd absdiff;  // |x - y|
  std::vector<std::string> labels;
};

WedgeData wedge_data(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Cells present (finite) in both tables, matched by row and column label.
WedgeData wedge_data(const LabelledMatrix& x, const LabelledMatrix& y);

void write_wedge_csv(std::ostream& out, const WedgeData& w);

/// Spearman rank correlation with average ranks for ties.
double spearman(const Eigen::VectorXd& x, const Eigen::VectorXd& y);
double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// 1-based average ranks.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& x);

struct SyntheticComparison {
  Eigen::VectorXd rms;
  Eigen::VectorXd correlation;
  Eigen::VectorXd variance_ratio;  // var(synthetic) / var(actual)
  /// 1 + number of synthetic series with variance below the actual's;
  /// uniform on 1..K+1 when the actual is exchangeable with the ensemble.
  int variance_rank = 0;
  int ensemble_size = 0;
};

SyntheticComparison compare_synthetic(const Eigen::VectorXd& actual,
                                      const std::vector<Eigen::VectorXd>& synthetic);

/// Chi-square p-value for ranks uniform on 1..categories, after pooling the
/// categories into `groups` contiguous groups.
double rank_uniformity_pvalue(const std::vector<int>& ranks, int categories, int groups = 10);

}  // namespace stochdyn
