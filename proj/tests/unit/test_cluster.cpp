#include <gtest/gtest.h>

#include <cmath>

#include "stochdyn/cluster.hpp"
#include "stochdyn/error.hpp"

using namespace stochdyn;

namespace {

ClusterProcessParams single(double lambda, double m, double rho) {
  ClusterProcessParams p;
  p.lambda = lambda;
  p.m = m;
  p.rho = rho;
  p.window = {0, 0, 10, 10};
  return p;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::usage;
}

}  // namespace

TEST(Plate, EmptyWhenNothingExpected) {
  for (const auto& p : {single(0.0, 5.0, 0.1), single(3.0, 0.0, 0.1)}) {
    RngStream rng(1, 0);
    EXPECT_EQ(simulate_cluster_plate(p, rng).rows(), 0);
    EXPECT_EQ(expected_plate_points(p), 0.0);
  }
}

TEST(Plate, PointCountMeanMatchesExpectation) {
  const ClusterProcessParams p = single(0.5, 4.0, 0.3);
  const int reps = 400;
  double s = 0.0, ss = 0.0;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(2, r);
    const double n = static_cast<double>(simulate_cluster_plate(p, rng).rows());
    s += n;
    ss += n * n;
  }
  const double mean = s / reps, var = ss / reps - mean * mean;
  // parents outside the window replace the offspring that land outside it
  EXPECT_NEAR(mean, p.lambda * p.m * p.window.area(), 4.0 * std::sqrt(var / reps));
  // the cap counts everything generated in the dilated window
  EXPECT_NEAR(expected_plate_points(p), p.lambda * p.m * p.window.dilated(4 * p.rho).area(), 1e-9);
  // with Poisson parents the count is overdispersed by about 1 + m
  EXPECT_GT(var / mean, 2.5);
}

TEST(Plate, PointsInsideWindow) {
  ClusterProcessParams p = single(1.0, 6.0, 0.8);
  p.second_stage = SecondStage{0.2, 5, 1.0};
  RngStream rng(3, 0);
  const Eigen::MatrixX2d pts = simulate_cluster_plate(p, rng);
  ASSERT_GT(pts.rows(), 0);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) EXPECT_TRUE(p.window.contains(pts(i, 0), pts(i, 1)));
}

TEST(Plate, Deterministic) {
  const ClusterProcessParams p = single(1.0, 3.0, 0.2);
  RngStream a(4, 0), b(4, 0);
  EXPECT_EQ(simulate_cluster_plate(p, a), simulate_cluster_plate(p, b));
}

TEST(Plate, SizeCapAndBadParameters) {
  ClusterProcessParams p = single(1.0, 1000.0, 0.1);
  p.max_expected_points = 1000;
  RngStream rng(5, 0);
  EXPECT_EQ(code_of([&] { simulate_cluster_plate(p, rng); }), ErrorCode::size);
  EXPECT_EQ(code_of([&] { simulate_cluster_plate(single(-1.0, 1.0, 0.1), rng); }), ErrorCode::parameter);
}

TEST(Index, LatticeIsZero) {
  Eigen::MatrixX2d pts(100, 2);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) pts.row(10 * i + j) << i + 0.5, j + 0.5;
  EXPECT_EQ(clumpiness_index(pts, {0, 0, 10, 10}, 1.0), 0.0);
}

TEST(Index, AllInOneQuadratEqualsCount) {
  // mean n/Q, variance (n^2 - n^2/Q)/(Q - 1) = n^2/Q, ratio n
  const int n = 37;
  Eigen::MatrixX2d pts(n, 2);
  for (int i = 0; i < n; ++i) pts.row(i) << 3.1 + 0.01 * i, 7.2;
  EXPECT_NEAR(clumpiness_index(pts, {0, 0, 10, 10}, 1.0), double(n), 1e-12);
}

TEST(Index, QuadratCountsDropPartialCells) {
  Eigen::MatrixX2d pts(3, 2);
  pts << 0.5, 0.5, 1.5, 0.5, 2.7, 0.5;
  const Eigen::VectorXd c = quadrat_counts(pts, {0, 0, 2.9, 1}, 1.0);
  ASSERT_EQ(c.size(), 2);
  EXPECT_EQ(c.sum(), 2.0);
}

TEST(Index, TranslationInvariance) {
  ClusterProcessParams p = single(0.8, 5.0, 0.4);
  RngStream rng(6, 0);
  const Eigen::MatrixX2d pts = simulate_cluster_plate(p, rng);
  const Eigen::RowVector2d v(16.0, -32.0);
  const Eigen::MatrixX2d moved = pts.rowwise() + v;
  EXPECT_NEAR(clumpiness_index(moved, {16, -32, 26, -22}, 1.0), clumpiness_index(pts, p.window, 1.0), 1e-12);
}

TEST(Index, EmptyIsUndefined) {
  EXPECT_EQ(code_of([] { clumpiness_index(Eigen::MatrixX2d(0, 2), {0, 0, 10, 10}, 1.0); }), ErrorCode::undefined_index);
  EXPECT_EQ(code_of([] { clumpiness_index(Eigen::MatrixX2d(0, 2), {0, 0, 10, 10}, 0.0); }), ErrorCode::parameter);
}

TEST(Index, TighterClustersAreClumpier) {
  const int seeds = 100;
  int tighter = 0;
  for (int s = 0; s < seeds; ++s) {
    RngStream a(7 + s, 0), b(7 + s, 0);
    const double wide = clumpiness_index(simulate_cluster_plate(single(0.5, 6.0, 0.6), a), {0, 0, 10, 10}, 1.0);
    const double tight = clumpiness_index(simulate_cluster_plate(single(0.5, 6.0, 0.3), b), {0, 0, 10, 10}, 1.0);
    if (tight > wide) ++tighter;
  }
  EXPECT_GE(tighter, 90);
}

TEST(Index, PoissonCaseNearOne) {
  ClusterProcessParams p = single(2.0, 1.0, 1e-9);
  p.fixed_offspring = true;
  double s = 0.0;
  const int seeds = 200;
  std::vector<double> v;
  for (int k = 0; k < seeds; ++k) {
    RngStream rng(8, k);
    v.push_back(clumpiness_index(simulate_cluster_plate(p, rng), p.window, 1.0));
    s += v.back();
  }
  const double mean = s / seeds;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  EXPECT_NEAR(mean, 1.0, 3.0 * std::sqrt(ss / (seeds - 1) / seeds));
}
