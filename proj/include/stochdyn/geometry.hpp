#pragma once

#include <vector>

#include <Eigen/Dense>

namespace stochdyn {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

using Point = Point2<double>;

/// Closed simple polygon. Vertices are stored as the columns of a 2 x n matrix
/// in their original order; the closing edge (n-1 -> 0) is implicit.
class Region {
 public:
  explicit Region(Eigen::Matrix2Xd vertices);
  static Region from_points(const std::vector<Point>& vertices);
  static Region rectangle(double x0, double y0, double x1, double y1);

  const Eigen::Matrix2Xd& vertices() const noexcept { return vertices_; }
  Eigen::Index size() const noexcept { return vertices_.cols(); }
  Point vertex(Eigen::Index i) const { return vertices_.col(i % size()); }
  double signed_area() const noexcept { return signed_area_; }
  bool counter_clockwise() const noexcept { return signed_area_ > 0.0; }

  /// Axis-aligned bounding box as (min, max).
  std::pair<Point, Point> bounds() const;

 private:
  Eigen::Matrix2Xd vertices_;
  double signed_area_ = 0.0;
};

/// Closest point on a polygon boundary and the index of the edge it lies on.
struct BoundaryProjection {
  Point point;
  double distance = 0.0;
  Eigen::Index edge = 0;
};

/// Even-odd membership; points on an edge count as inside.
bool point_in_region(const Region& region, const Point& q);

/// Euclidean distance from q to the nearest edge; zero on the boundary and
/// positive both inside and outside.
double region_distance(const Region& region, const Point& q);

/// Nearest boundary point. Ties are resolved in favour of the first edge in
/// vertex order.
BoundaryProjection nearest_boundary_point(const Region& region, const Point& q);

/// Distance from q to the segment [a, b].
template <typename Scalar>
Scalar segment_distance(const Point2<Scalar>& q, const Point2<Scalar>& a,
                        const Point2<Scalar>& b) {
  const Point2<Scalar> ab = b - a;
  const Scalar len2 = ab.squaredNorm();
  Scalar s = len2 > Scalar(0) ? (q - a).dot(ab) / len2 : Scalar(0);
  s = s < Scalar(0) ? Scalar(0) : (s > Scalar(1) ? Scalar(1) : s);
  return (q - (a + s * ab)).norm();
}

}  // namespace stochdyn
