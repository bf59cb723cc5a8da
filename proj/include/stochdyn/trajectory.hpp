#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stochdyn {

/// Time-stamped sampled path r(t_i) in one or two dimensions.
///
/// Positions are stored one point per row. Quality labels (Argos location
/// classes) are optional and kept as strings. Spatial units are kilometres by
/// convention; times are plain reals (hours unless a caller says otherwise).
class Trajectory {
 public:
  Trajectory(Eigen::VectorXd times, Eigen::MatrixXd positions,
             std::vector<std::string> quality = {});

  Eigen::Index size() const noexcept { return times_.size(); }
  Eigen::Index dim() const noexcept { return positions_.cols(); }
  const Eigen::VectorXd& times() const noexcept { return times_; }
  const Eigen::MatrixXd& positions() const noexcept { return positions_; }
  const std::vector<std::string>& quality() const noexcept { return quality_; }
  bool has_quality() const noexcept { return !quality_.empty(); }

  double time(Eigen::Index i) const { return times_(i); }
  Eigen::VectorXd position(Eigen::Index i) const { return positions_.row(i).transpose(); }

 private:
  Eigen::VectorXd times_;
  Eigen::MatrixXd positions_;
  std::vector<std::string> quality_;
};

using QualityFilter = std::set<std::string>;

/// Location classes whose predicted error is 1 km or less.
QualityFilter high_quality_location_classes();

Trajectory load_trajectory(const std::filesystem::path& path,
                           const std::optional<QualityFilter>& quality_filter = std::nullopt);
Trajectory parse_trajectory(std::istream& in, const std::string& source_name,
                            const std::optional<QualityFilter>& quality_filter = std::nullopt);

/// Writes the `t,x[,y][,lc]` format with round-trip precision.
void write_trajectory(std::ostream& out, const Trajectory& traj);
void save_trajectory(const std::filesystem::path& path, const Trajectory& traj);

/// Replicate batch: one file with a leading `rep` column.
void write_trajectory_batch(std::ostream& out, const std::vector<Trajectory>& reps);

/// Formats a double with the shortest representation that round-trips.
std::string format_double(double value);

}  // namespace stochdyn
