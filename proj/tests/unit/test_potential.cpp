#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "stochdyn/error.hpp"
#include "stochdyn/potential.hpp"
#include "stochdyn/sde.hpp"

using namespace stochdyn;
using Beta = Eigen::Matrix<double, 5, 1>;

namespace {

const Region kFarIsland = Region::rectangle(1000, 1000, 1001, 1001);

PotentialSpec poly(std::initializer_list<double> b, double c = 0.0, const Region& shore = kFarIsland) {
  Beta beta;
  int k = 0;
  for (double v : b) beta(k++) = v;
  return PolynomialShore{beta, c, shore};
}

}  // namespace

TEST(EvalPotential, Examples) {
  EXPECT_DOUBLE_EQ(eval_potential(poly({1, 0, 0, 0, 0}), Point(3, 7)), 3.0);
  EXPECT_DOUBLE_EQ(eval_potential(poly({0, 0, 1, 0, 1}), Point(1, 2)), 5.0);
  // C = 7.5 at distance 2.5 from the shore
  const Region sq = Region::rectangle(0, 0, 1, 1);
  EXPECT_DOUBLE_EQ(eval_potential(poly({0, 0, 0, 0, 0}, 7.5, sq), Point(3.5, 0.5)), 3.0);
}

TEST(EvalPotential, SingularOnAndInsideShore) {
  const Region sq = Region::rectangle(0, 0, 1, 1);
  const PotentialSpec spec = poly({0, 0, 0, 0, 0}, 7.5, sq);
  for (const Point& q : {Point(1.0, 0.5), Point(0.5, 0.5)}) {
    try {
      eval_potential(spec, q);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::singularity);
    }
    EXPECT_THROW(grad_potential(spec, q), Error);
  }
}

TEST(EvalPotential, VertexRotationInvariance) {
  const std::vector<Point> v{{0, 0}, {3, -1}, {4, 2}, {1, 3}, {-1, 1}};
  std::vector<Point> rotated(v.begin() + 2, v.end());
  rotated.insert(rotated.end(), v.begin(), v.begin() + 2);
  Beta beta;
  beta << 0.4, -0.2, 0.1, 0.05, -0.3;
  const PotentialSpec a = PolynomialShore{beta, 3.0, Region::from_points(v)};
  const PotentialSpec b = PolynomialShore{beta, 3.0, Region::from_points(rotated)};
  RngStream rng(2, 0);
  for (int k = 0; k < 200; ++k) {
    const Point q(rng.uniform(6, 10), rng.uniform(-8, 8));
    EXPECT_NEAR(eval_potential(a, q), eval_potential(b, q), 1e-12);
  }
}

TEST(GradPotential, Examples) {
  EXPECT_EQ(grad_potential(poly({1, 0, 0, 0, 0}), Point(-4, 9)), Eigen::Vector2d(1, 0));
  EXPECT_EQ(grad_potential(poly({0, 0, 1, 0, 0}), Point(2, 5)), Eigen::Vector2d(4, 0));
}

TEST(GradPotential, MatchesCentralDifferences) {
  const Region island = Region::from_points({{0, 0}, {3, -1}, {4, 2}, {1, 3}, {-1, 1}});
  RngStream rng(31, 0);
  int probes = 0;
  while (probes < 1000) {
    Beta beta;
    for (int k = 0; k < 5; ++k) beta(k) = rng.uniform(-3, 3);
    const PotentialSpec spec = PolynomialShore{beta, rng.uniform(0.1, 8.0), island};
    const Point q(rng.uniform(-6, 9), rng.uniform(-6, 8));
    if (point_in_region(island, q) || region_distance(island, q) <= 0.1) continue;
    // skip probes where two edges are nearly equidistant (distance not smooth there)
    const BoundaryProjection p = nearest_boundary_point(island, q);
    bool ridge = false;
    for (Eigen::Index e = 0; e < island.size(); ++e) {
      if (e == p.edge) continue;
      const Point a = island.vertex(e), d = island.vertex(e + 1) - a;
      const Point near_e = a + std::clamp((q - a).dot(d) / d.squaredNorm(), 0.0, 1.0) * d;
      if ((q - near_e).norm() - p.distance < 1e-3 && (near_e - p.point).norm() > 1e-9) ridge = true;
    }
    if (ridge) continue;
    const Eigen::Vector2d fd = oracle::central_gradient(spec, q, 1e-5);
    const Eigen::Vector2d an = grad_potential(spec, q);
    EXPECT_LE((an - fd).norm(), 1e-4 * std::max(1.0, fd.norm())) << q.transpose();
    ++probes;
  }
}

TEST(GradPotential, GenericFallsBackToDifferences) {
  const PotentialSpec spec = GenericPotential{[](const Point& q) { return std::sin(q.x()) * std::cos(q.y()); }, {}};
  const Point q(0.3, 0.7);
  const Eigen::Vector2d exact(std::cos(0.3) * std::cos(0.7), -std::sin(0.3) * std::sin(0.7));
  EXPECT_LE((grad_potential(spec, q) - exact).norm(), 1e-7);
}

TEST(FiniteDiff, Examples) {
  const Eigen::Vector2d g = finite_diff_grad([](const Point& q) { return q.x() * q.x(); }, Point(3, 0), 1e-4);
  EXPECT_NEAR(g(0), 6.0, 1e-6);
  EXPECT_NEAR(g(1), 0.0, 1e-12);
  EXPECT_EQ(finite_diff_grad([](const Point&) { return 4.0; }, Point(1, 1), 1e-3), Eigen::Vector2d::Zero());
  const Eigen::Vector2d s =
      finite_diff_grad([](const Point& q) { return std::sin(q.x()) * std::cos(q.y()); }, Point(0.3, 0.7), 1e-5);
  EXPECT_NEAR(s(0), std::cos(0.3) * std::cos(0.7), 1e-7);
  EXPECT_NEAR(s(1), -std::sin(0.3) * std::sin(0.7), 1e-7);
}

TEST(GradientDrift, ZeroAtConvexMinimum) {
  // H = (x - 2)^2 + (y + 1)^2 + xy/2 expanded, minimum solved by hand
  Beta beta;
  beta << -4, 2, 1, 0.5, 1;
  // grad: (-4 + 2x + y/2, 2 + x/2 + 2y) = 0  ->  x = 2.4, y = -1.6
  const DriftField f = gradient_system_drift(PolynomialShore{beta, 0.0, kFarIsland});
  EXPECT_LE(f(Eigen::Vector2d(2.4, -1.6), 0.0).norm(), 1e-10);
}

TEST(LoadPotential, ResolvesRegionRelativeToJson) {
  const std::filesystem::path dir = std::filesystem::path(STOCHDYN_WORK_DIR) / "potential";
  std::filesystem::create_directories(dir / "sub");
  std::ofstream(dir / "sub" / "isle.csv") << "x,y\n0,0\n1,0\n1,1\n0,1\n";
  std::ofstream(dir / "spec.json")
      << R"({"variant": "polynomial-shore", "beta": [1, 2, 0, 0, 0], "C": 2, "region_file": "sub/isle.csv"})";
  const PotentialSpec spec = load_potential_spec(dir / "spec.json");
  ASSERT_TRUE(spec.is_polynomial_shore());
  // distance from (3, 0.5) to the unit square is 2
  EXPECT_DOUBLE_EQ(eval_potential(spec, Point(3, 0.5)), 3 + 1 + 1.0);
}

TEST(LoadPotential, BadJsonIsParseError) {
  const std::filesystem::path dir = std::filesystem::path(STOCHDYN_WORK_DIR) / "potential";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"({"variant": "polynomial-shore", "beta": [1, 2]})";
  EXPECT_THROW(load_potential_spec(dir / "bad.json"), Error);
}
