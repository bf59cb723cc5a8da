#include "stochdyn/cluster.hpp"

#include <cmath>
#include <vector>

#include "stochdyn/error.hpp"

namespace stochdyn {

namespace {

void check(const ClusterProcessParams& p) {
  if (!(p.window.width() > 0.0) || !(p.window.height() > 0.0))
    throw Error(ErrorCode::parameter, "degenerate window");
  if (!(p.lambda >= 0.0) || !(p.m >= 0.0) || !(p.rho >= 0.0) || !std::isfinite(p.lambda) ||
      !std::isfinite(p.m) || !std::isfinite(p.rho))
    throw Error(ErrorCode::parameter, "lambda, m and rho must be finite and nonnegative");
  if (p.second_stage) {
    const auto& s = *p.second_stage;
    if (!(s.lambda2 >= 0.0) || !(s.m2 >= 0.0) || !(s.rho2 >= 0.0))
      throw Error(ErrorCode::parameter, "second-stage parameters must be nonnegative");
  }
}

double margin(const ClusterProcessParams& p) {
  return 4.0 * (p.rho + (p.second_stage ? p.second_stage->rho2 : 0.0));
}

std::int64_t offspring_count(const ClusterProcessParams& p, RngStream& rng) {
  return p.fixed_offspring ? std::llround(p.m) : rng.poisson(p.m);
}

}  // namespace

double expected_plate_points(const ClusterProcessParams& p) {
  const double area = p.window.dilated(margin(p)).area();
  const double centres = p.second_stage ? p.second_stage->lambda2 * p.second_stage->m2 : p.lambda;
  return centres * area * p.m;
}

Eigen::MatrixX2d simulate_cluster_plate(const ClusterProcessParams& p, RngStream& rng) {
  check(p);
  const double expected = expected_plate_points(p);
  if (expected > p.max_expected_points)
    throw Error(ErrorCode::size, "expected point count " + std::to_string(expected) + " exceeds the cap");
  const Rect outer = p.window.dilated(margin(p));

  std::vector<Eigen::Vector2d> parents;
  if (p.second_stage) {
    const auto& s = *p.second_stage;
    const std::int64_t k = rng.poisson(s.lambda2 * outer.area());
    for (std::int64_t i = 0; i < k; ++i) {
      const Eigen::Vector2d c(rng.uniform(outer.xmin, outer.xmax), rng.uniform(outer.ymin, outer.ymax));
      const std::int64_t kids = rng.poisson(s.m2);
      for (std::int64_t j = 0; j < kids; ++j) {
        const double dx = rng.normal(), dy = rng.normal();
        parents.emplace_back(c.x() + s.rho2 * dx, c.y() + s.rho2 * dy);
      }
    }
  } else {
    const std::int64_t k = rng.poisson(p.lambda * outer.area());
    parents.reserve(static_cast<std::size_t>(k));
    for (std::int64_t i = 0; i < k; ++i) {
      const double x = rng.uniform(outer.xmin, outer.xmax);
      const double y = rng.uniform(outer.ymin, outer.ymax);
      parents.emplace_back(x, y);
    }
  }

  std::vector<Eigen::Vector2d> pts;
  for (const auto& c : parents) {
    const std::int64_t kids = offspring_count(p, rng);
    for (std::int64_t j = 0; j < kids; ++j) {
      const double dx = rng.normal(), dy = rng.normal();
      const double x = c.x() + p.rho * dx, y = c.y() + p.rho * dy;
      if (p.window.contains(x, y)) pts.emplace_back(x, y);
    }
  }
  Eigen::MatrixX2d out(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return out;
}

Eigen::VectorXd quadrat_counts(const Eigen::MatrixX2d& points, const Rect& window, double quadrat) {
  if (!(quadrat > 0.0)) throw Error(ErrorCode::parameter, "quadrat side must be positive");
  const auto nx = static_cast<Eigen::Index>(std::floor(window.width() / quadrat + 1e-9));
  const auto ny = static_cast<Eigen::Index>(std::floor(window.height() / quadrat + 1e-9));
  if (nx * ny < 2) throw Error(ErrorCode::parameter, "need at least two whole quadrats in the window");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(nx * ny);
  for (Eigen::Index k = 0; k < points.rows(); ++k) {
    const double u = (points(k, 0) - window.xmin) / quadrat;
    const double v = (points(k, 1) - window.ymin) / quadrat;
    if (u < 0.0 || v < 0.0) continue;
    const auto i = static_cast<Eigen::Index>(std::floor(u));
    const auto j = static_cast<Eigen::Index>(std::floor(v));
    if (i >= nx || j >= ny) continue;
    counts(j * nx + i) += 1.0;
  }
  return counts;
}

double clumpiness_index(const Eigen::MatrixX2d& points, const Rect& window, double quadrat) {
  const Eigen::VectorXd c = quadrat_counts(points, window, quadrat);
  const double mean = c.mean();
  if (mean == 0.0) throw Error(ErrorCode::undefined_index, "no points fall in whole quadrats; index undefined");
  const double var = (c.array() - mean).square().sum() / static_cast<double>(c.size() - 1);
  return var / mean;
}

}  // namespace stochdyn
