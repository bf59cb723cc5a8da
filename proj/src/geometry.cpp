#include "stochdyn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stochdyn/error.hpp"

namespace stochdyn {

Region::Region(Eigen::Matrix2Xd vertices) : vertices_(std::move(vertices)) {
  if (vertices_.cols() < 3)
    throw Error(ErrorCode::data, "region needs at least 3 vertices");
  if (!vertices_.allFinite())
    throw Error(ErrorCode::data, "region vertices must be finite");
  const Eigen::Index n = vertices_.cols();
  double twice = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = (i + 1) % n;
    twice += vertices_(0, i) * vertices_(1, j) - vertices_(0, j) * vertices_(1, i);
  }
  signed_area_ = 0.5 * twice;
  if (signed_area_ == 0.0)
    throw Error(ErrorCode::data, "region has zero signed area");
}

Region Region::from_points(const std::vector<Point>& vertices) {
  Eigen::Matrix2Xd m(2, static_cast<Eigen::Index>(vertices.size()));
  for (std::size_t i = 0; i < vertices.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = vertices[i];
  return Region(std::move(m));
}

Region Region::rectangle(double x0, double y0, double x1, double y1) {
  Eigen::Matrix2Xd m(2, 4);
  m << x0, x1, x1, x0,
       y0, y0, y1, y1;
  return Region(std::move(m));
}

std::pair<Point, Point> Region::bounds() const {
  return {vertices_.rowwise().minCoeff(), vertices_.rowwise().maxCoeff()};
}

BoundaryProjection nearest_boundary_point(const Region& region, const Point& q) {
  BoundaryProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  const Eigen::Index n = region.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point a = region.vertex(i);
    const Point b = region.vertex(i + 1);
    const Point ab = b - a;
    const double len2 = ab.squaredNorm();
    double s = len2 > 0.0 ? (q - a).dot(ab) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    const Point foot = a + s * ab;
    const double d = (q - foot).norm();
    if (d < best.distance) {
      best.distance = d;
      best.point = foot;
      best.edge = i;
    }
  }
  return best;
}

double region_distance(const Region& region, const Point& q) {
  double best = std::numeric_limits<double>::infinity();
  const Eigen::Index n = region.size();
  for (Eigen::Index i = 0; i < n; ++i)
    best = std::min(best, segment_distance<double>(q, region.vertex(i), region.vertex(i + 1)));
  return best;
}

bool point_in_region(const Region& region, const Point& q) {
  const Eigen::Index n = region.size();
  bool inside = false;
  for (Eigen::Index i = 0, j = n - 1; i < n; j = i++) {
    const Point a = region.vertex(i);
    const Point b = region.vertex(j);
    // On-edge test: collinear and within the segment's bounding box.
    const double cross = (b.x() - a.x()) * (q.y() - a.y()) - (b.y() - a.y()) * (q.x() - a.x());
    if (cross == 0.0 && q.x() >= std::min(a.x(), b.x()) && q.x() <= std::max(a.x(), b.x()) &&
        q.y() >= std::min(a.y(), b.y()) && q.y() <= std::max(a.y(), b.y()))
      return true;
    if ((a.y() > q.y()) != (b.y() > q.y())) {
      const double x_cross = a.x() + (q.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (q.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

}  // namespace stochdyn
