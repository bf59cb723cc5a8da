#pragma once

#include <optional>

#include <Eigen/Dense>

#include "stochdyn/rng.hpp"

namespace stochdyn {

struct Rect {
  double xmin = 0.0, ymin = 0.0, xmax = 1.0, ymax = 1.0;

  double width() const noexcept { return xmax - xmin; }
  double height() const noexcept { return ymax - ymin; }
  double area() const noexcept { return width() * height(); }
  bool contains(double x, double y) const noexcept { return x >= xmin && x < xmax && y >= ymin && y < ymax; }
  Rect dilated(double by) const noexcept { return {xmin - by, ymin - by, xmax + by, ymax + by}; }
};

/// Clusters of cluster centres: super-centres at intensity lambda2, each
/// with Poisson(m2) cluster centres displaced N(0, rho2^2).
struct SecondStage {
  double lambda2 = 0.0;
  double m2 = 0.0;
  double rho2 = 0.0;
};

struct ClusterProcessParams {
  double lambda = 0.0;  // parent intensity per unit area
  double m = 0.0;       // mean offspring per parent
  bool fixed_offspring = false;  // exactly round(m) offspring instead of Poisson(m)
  double rho = 0.0;     // isotropic Gaussian displacement scale
  Rect window;
  std::optional<SecondStage> second_stage;
  double max_expected_points = 1e7;
};

/// Points (n x 2) of one synthetic plate. Parents live in the window dilated
/// by 4 rho (4 (rho + rho2) with a second stage); offspring outside the window
/// are dropped.
Eigen::MatrixX2d simulate_cluster_plate(const ClusterProcessParams& params, RngStream& rng);

double expected_plate_points(const ClusterProcessParams& params);

/// Quadrat counts on the grid of side `quadrat` anchored at the window's
/// lower-left corner; partial quadrats at the far edges are dropped.
Eigen::VectorXd quadrat_counts(const Eigen::MatrixX2d& points, const Rect& window, double quadrat);

/// Sample variance over mean of the quadrat counts.
double clumpiness_index(const Eigen::MatrixX2d& points, const Rect& window, double quadrat);

}  // namespace stochdyn
