#include "stochdyn/sardine.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "stochdyn/error.hpp"

namespace stochdyn {

namespace {

int parse_age(const std::string& label) {
  // "age = 1" style labels are accepted too; the last integer wins
  std::size_t end = label.find_last_of("0123456789");
  if (end == std::string::npos) throw Error(ErrorCode::parse, "age label without a number: " + label);
  std::size_t begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(label[begin - 1]))) --begin;
  int age = 0;
  std::from_chars(label.data() + begin, label.data() + end + 1, age);
  return age;
}

std::string cell_name(const SardineTable& t, Eigen::Index row, Eigen::Index col) {
  return "age " + std::to_string(t.ages[static_cast<std::size_t>(row)]) + ", season " +
         t.seasons[static_cast<std::size_t>(col)];
}

}  // namespace

SardineTable SardineTable::from_matrix(const LabelledMatrix& m) {
  SardineTable t;
  t.seasons = m.column_labels;
  t.catches = m.values;
  for (const auto& label : m.row_labels) t.ages.push_back(parse_age(label));
  for (std::size_t i = 1; i < t.ages.size(); ++i)
    if (t.ages[i] != t.ages[i - 1] + 1) throw Error(ErrorCode::data, "ages must be consecutive");
  return t;
}

LabelledMatrix SardineTable::to_matrix() const {
  LabelledMatrix m;
  for (int a : ages) m.row_labels.push_back(std::to_string(a));
  m.column_labels = seasons;
  m.values = catches;
  return m;
}

int SardineTable::age_row(int age) const {
  for (std::size_t i = 0; i < ages.size(); ++i)
    if (ages[i] == age) return static_cast<int>(i);
  return -1;
}

SardineTable load_sardine_table(const std::filesystem::path& path) {
  return SardineTable::from_matrix(read_labelled_matrix(path));
}

SardineFit fit_sardine(const SardineTable& table, int age_lo, int age_hi) {
  if (age_hi < age_lo) throw Error(ErrorCode::parameter, "empty age window");
  const int lo = table.age_row(age_lo);
  const int top = table.age_row(age_hi + 1);
  if (lo < 0 || top < 0)
    throw Error(ErrorCode::data, "table does not cover ages " + std::to_string(age_lo) + ".." +
                                     std::to_string(age_hi + 1));
  const auto seasons = static_cast<Eigen::Index>(table.seasons.size());
  if (seasons < 2) throw Error(ErrorCode::insufficient_data, "need at least two seasons");
  const Eigen::Index n_age = age_hi - age_lo + 1;
  const Eigen::Index n_r = seasons - 1;

  // columns: log r_2..log r_{T-1}, then log p*_a
  const Eigen::Index rows = n_r * n_age;
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(rows, n_r - 1 + n_age);
  Eigen::VectorXd y(rows);
  Eigen::Index k = 0;
  for (Eigen::Index t = 0; t < n_r; ++t) {
    for (Eigen::Index j = 0; j < n_age; ++j, ++k) {
      const Eigen::Index a = lo + j;
      const double from = table.catches(a, t), to = table.catches(a + 1, t + 1);
      if (!(from > 0.0)) throw Error(ErrorCode::data, "nonpositive or missing catch at " + cell_name(table, a, t));
      if (!(to > 0.0))
        throw Error(ErrorCode::data, "nonpositive or missing catch at " + cell_name(table, a + 1, t + 1));
      y(k) = std::log(to / from);
      if (t > 0) design(k, t - 1) = 1.0;
      design(k, n_r - 1 + j) = 1.0;
    }
  }
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);

  SardineFit fit;
  fit.age_lo = age_lo;
  fit.age_hi = age_hi;
  fit.r.resize(n_r);
  fit.r(0) = 1.0;
  for (Eigen::Index t = 1; t < n_r; ++t) fit.r(t) = std::exp(coef(t - 1));
  fit.p_star = coef.tail(n_age).array().exp();
  fit.seasons.assign(table.seasons.begin(), table.seasons.begin() + n_r);
  fit.rss = (design * coef - y).squaredNorm();
  fit.observations = rows;
  return fit;
}

double sardine_log_rss(const SardineTable& table, const SardineFit& fit) {
  const int lo = table.age_row(fit.age_lo);
  double rss = 0.0;
  for (Eigen::Index t = 0; t < fit.r.size(); ++t)
    for (Eigen::Index j = 0; j < fit.p_star.size(); ++j) {
      const Eigen::Index a = lo + j;
      const double e = std::log(table.catches(a + 1, t + 1) / table.catches(a, t)) - std::log(fit.r(t)) -
                       std::log(fit.p_star(j));
      rss += e * e;
    }
  return rss;
}

SardineTable predict_sardine(const SardineTable& table, const SardineFit& fit) {
  const int lo = table.age_row(fit.age_lo);
  if (lo < 0 || table.age_row(fit.age_hi + 1) < 0)
    throw Error(ErrorCode::data, "table does not cover the fitted age window");
  if (fit.r.size() > static_cast<Eigen::Index>(table.seasons.size()) - 1)
    throw Error(ErrorCode::data, "fit has more seasons than the table");
  SardineTable out = table;
  out.catches.setConstant(std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index t = 0; t < fit.r.size(); ++t)
    for (Eigen::Index j = 0; j < fit.p_star.size(); ++j) {
      const Eigen::Index a = lo + j;
      out.catches(a + 1, t + 1) = table.catches(a, t) * fit.r(t) * fit.p_star(j);
    }
  return out;
}

}  // namespace stochdyn
