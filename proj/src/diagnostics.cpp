#include "stochdyn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "stochdyn/error.hpp"
#include "stochdyn/special.hpp"
#include "stochdyn/trajectory.hpp"

namespace stochdyn {

WedgeData wedge_data(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::data, "wedge inputs differ in length");
  WedgeData w;
  w.mean = 0.5 * (x + y);
  w.diff = x - y;
  w.absdiff = w.diff.cwiseAbs();
  w.labels.resize(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) w.labels[static_cast<std::size_t>(i)] = std::to_string(i + 1);
  return w;
}

WedgeData wedge_data(const LabelledMatrix& x, const LabelledMatrix& y) {
  std::vector<double> xs, ys;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < x.row_labels.size(); ++i) {
    const auto ri = std::find(y.row_labels.begin(), y.row_labels.end(), x.row_labels[i]);
    if (ri == y.row_labels.end()) continue;
    const auto yi = static_cast<Eigen::Index>(ri - y.row_labels.begin());
    for (std::size_t j = 0; j < x.column_labels.size(); ++j) {
      const auto cj = std::find(y.column_labels.begin(), y.column_labels.end(), x.column_labels[j]);
      if (cj == y.column_labels.end()) continue;
      const auto yj = static_cast<Eigen::Index>(cj - y.column_labels.begin());
      const double a = x.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const double b = y.values(yi, yj);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      xs.push_back(a);
      ys.push_back(b);
      labels.push_back(x.row_labels[i] + "/" + x.column_labels[j]);
    }
  }
  if (xs.empty()) throw Error(ErrorCode::data, "tables share no finite cells");
  WedgeData w = wedge_data(Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size())),
                           Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size())));
  w.labels = std::move(labels);
  return w;
}

void write_wedge_csv(std::ostream& out, const WedgeData& w) {
  out << "label,mean,diff,absdiff\n";
  for (Eigen::Index i = 0; i < w.mean.size(); ++i)
    out << w.labels[static_cast<std::size_t>(i)] << ',' << format_double(w.mean(i)) << ','
        << format_double(w.diff(i)) << ',' << format_double(w.absdiff(i)) << '\n';
}

Eigen::VectorXd average_ranks(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return x(a) < x(b); });
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && x(order[static_cast<std::size_t>(j + 1)]) == x(order[static_cast<std::size_t>(i)])) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) r(order[static_cast<std::size_t>(k)]) = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::data, "series differ in length");
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::ArrayXd a = x.array() - x.mean();
  const Eigen::ArrayXd b = y.array() - y.mean();
  const double den = std::sqrt(a.square().sum() * b.square().sum());
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (a * b).sum() / den;
}

double spearman(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::data, "series differ in length");
  return pearson(average_ranks(x), average_ranks(y));
}

namespace {

double variance(const Eigen::VectorXd& v) {
  return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

SyntheticComparison compare_synthetic(const Eigen::VectorXd& actual,
                                      const std::vector<Eigen::VectorXd>& synthetic) {
  if (synthetic.size() < 2) throw Error(ErrorCode::ensemble, "need at least two synthetic series");
  if (actual.size() < 2) throw Error(ErrorCode::insufficient_data, "series too short to compare");
  const auto k = static_cast<Eigen::Index>(synthetic.size());
  SyntheticComparison out;
  out.rms.resize(k);
  out.correlation.resize(k);
  out.variance_ratio.resize(k);
  out.ensemble_size = static_cast<int>(k);
  const double va = variance(actual);
  int below = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::VectorXd& s = synthetic[static_cast<std::size_t>(i)];
    if (s.size() != actual.size()) throw Error(ErrorCode::data, "synthetic series " + std::to_string(i) + " misaligned");
    out.rms(i) = std::sqrt((s - actual).squaredNorm() / static_cast<double>(s.size()));
    out.correlation(i) = pearson(actual, s);
    const double vs = variance(s);
    out.variance_ratio(i) = va > 0.0 ? vs / va : std::numeric_limits<double>::quiet_NaN();
    if (vs < va) ++below;
  }
  out.variance_rank = below + 1;
  return out;
}

double rank_uniformity_pvalue(const std::vector<int>& ranks, int categories, int groups) {
  if (ranks.empty()) throw Error(ErrorCode::insufficient_data, "no ranks");
  if (categories < 2 || groups < 2 || groups > categories)
    throw Error(ErrorCode::parameter, "bad category/group counts");
  std::vector<double> observed(static_cast<std::size_t>(groups), 0.0), width(static_cast<std::size_t>(groups), 0.0);
  auto group_of = [&](int rank) { return static_cast<std::size_t>(static_cast<long>(rank - 1) * groups / categories); };
  for (int r = 1; r <= categories; ++r) width[group_of(r)] += 1.0;
  for (int r : ranks) {
    if (r < 1 || r > categories) throw Error(ErrorCode::data, "rank outside 1..categories");
    observed[group_of(r)] += 1.0;
  }
  const double n = static_cast<double>(ranks.size());
  double stat = 0.0;
  for (std::size_t g = 0; g < observed.size(); ++g) {
    const double e = n * width[g] / categories;
    stat += (observed[g] - e) * (observed[g] - e) / e;
  }
  return special::chi_square_sf(stat, groups - 1);
}

}  // namespace stochdyn
