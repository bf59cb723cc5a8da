#include "stochdyn/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "stochdyn/csv.hpp"
#include "stochdyn/error.hpp"

namespace stochdyn {

Trajectory::Trajectory(Eigen::VectorXd times, Eigen::MatrixXd positions,
                       std::vector<std::string> quality)
    : times_(std::move(times)), positions_(std::move(positions)), quality_(std::move(quality)) {
  if (times_.size() < 2)
    throw Error(ErrorCode::insufficient_data, "trajectory needs at least 2 points");
  if (positions_.rows() != times_.size())
    throw Error(ErrorCode::data, "trajectory times and positions differ in length");
  if (positions_.cols() < 1 || positions_.cols() > 2)
    throw Error(ErrorCode::data, "trajectory dimension must be 1 or 2");
  if (!quality_.empty() && static_cast<Eigen::Index>(quality_.size()) != times_.size())
    throw Error(ErrorCode::data, "quality labels differ in length from times");
  if (!times_.allFinite() || !positions_.allFinite())
    throw Error(ErrorCode::data, "trajectory values must be finite");
  for (Eigen::Index i = 1; i < times_.size(); ++i)
    if (!(times_(i) > times_(i - 1)))
      throw Error(ErrorCode::duplicate_time, "trajectory times must be strictly increasing (index " +
                                                 std::to_string(i) + ")");
}

QualityFilter high_quality_location_classes() { return {"1", "2", "3"}; }

Trajectory parse_trajectory(std::istream& in, const std::string& source_name,
                            const std::optional<QualityFilter>& quality_filter) {
  const CsvTable table = read_csv(in, source_name);
  const int ct = table.column("t");
  const int cx = table.column("x");
  const int cy = table.column("y");
  int cq = table.column("lc");
  if (cq < 0) cq = table.column("quality");
  if (ct < 0 || cx < 0)
    throw Error(ErrorCode::parse, source_name + ": header must contain t and x columns");
  if (quality_filter && cq < 0)
    throw Error(ErrorCode::data, source_name + ": quality filter requested but no lc column");

  struct Row {
    double t;
    double x;
    double y;
    std::string q;
    std::size_t line;
  };
  std::vector<Row> rows;
  for (const auto& row : table.rows) {
    if (row.fields.size() != table.header.size())
      throw Error(ErrorCode::parse, source_name + ":" + std::to_string(row.line) + ": expected " +
                                        std::to_string(table.header.size()) + " fields");
    Row r{};
    r.line = row.line;
    r.t = parse_real(row.fields[static_cast<std::size_t>(ct)], source_name, row.line);
    r.x = parse_real(row.fields[static_cast<std::size_t>(cx)], source_name, row.line);
    r.y = cy >= 0 ? parse_real(row.fields[static_cast<std::size_t>(cy)], source_name, row.line) : 0.0;
    if (cq >= 0) r.q = row.fields[static_cast<std::size_t>(cq)];
    if (quality_filter && !quality_filter->count(r.q)) continue;
    rows.push_back(std::move(r));
  }
  if (rows.size() < 2)
    throw Error(ErrorCode::insufficient_data,
                source_name + ": fewer than 2 rows survive (" + std::to_string(rows.size()) + ")");
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].t == rows[i - 1].t)
      throw Error(ErrorCode::duplicate_time, source_name + ":" + std::to_string(rows[i].line) +
                                                 ": duplicate time " + format_double(rows[i].t));

  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = cy >= 0 ? 2 : 1;
  Eigen::VectorXd times(n);
  Eigen::MatrixXd pos(n, p);
  std::vector<std::string> quality;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Row& r = rows[static_cast<std::size_t>(i)];
    times(i) = r.t;
    pos(i, 0) = r.x;
    if (p == 2) pos(i, 1) = r.y;
    if (cq >= 0) quality.push_back(r.q);
  }
  return Trajectory(std::move(times), std::move(pos), std::move(quality));
}

Trajectory load_trajectory(const std::filesystem::path& path,
                           const std::optional<QualityFilter>& quality_filter) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return parse_trajectory(in, path.string(), quality_filter);
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

void write_header(std::ostream& out, const Trajectory& traj, bool with_rep) {
  if (with_rep) out << "rep,";
  out << "t,x";
  if (traj.dim() == 2) out << ",y";
  if (traj.has_quality()) out << ",lc";
  out << '\n';
}

void write_rows(std::ostream& out, const Trajectory& traj, const std::string& prefix) {
  for (Eigen::Index i = 0; i < traj.size(); ++i) {
    out << prefix << format_double(traj.time(i));
    for (Eigen::Index k = 0; k < traj.dim(); ++k) out << ',' << format_double(traj.positions()(i, k));
    if (traj.has_quality()) out << ',' << traj.quality()[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

}  // namespace

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  write_header(out, traj, false);
  write_rows(out, traj, "");
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  write_trajectory(out, traj);
}

void write_trajectory_batch(std::ostream& out, const std::vector<Trajectory>& reps) {
  if (reps.empty()) return;
  write_header(out, reps.front(), true);
  for (std::size_t r = 0; r < reps.size(); ++r) write_rows(out, reps[r], std::to_string(r) + ",");
}

}  // namespace stochdyn
