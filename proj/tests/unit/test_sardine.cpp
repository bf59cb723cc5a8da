#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "stochdyn/error.hpp"
#include "stochdyn/rng.hpp"
#include "stochdyn/sardine.hpp"

using namespace stochdyn;

namespace {

const std::filesystem::path kData(STOCHDYN_DATA_DIR);

// Ages 1..8, T seasons. Cells reached by the recursion follow m r_t p_a exactly,
// the rest are random.
SardineTable exact_table(const Eigen::VectorXd& r, const Eigen::VectorXd& p, int lo, RngStream& rng) {
  const Eigen::Index seasons = r.size() + 1;
  SardineTable t;
  for (int a = 1; a <= 8; ++a) t.ages.push_back(a);
  for (Eigen::Index s = 0; s < seasons; ++s) t.seasons.push_back("s" + std::to_string(s));
  t.catches.resize(8, seasons);
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index s = 0; s < seasons; ++s) t.catches(i, s) = rng.uniform(100.0, 5000.0);
  for (Eigen::Index s = 0; s + 1 < seasons; ++s)
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const int row = lo - 1 + static_cast<int>(k);
      t.catches(row + 1, s + 1) = t.catches(row, s) * r(s) * p(k);
    }
  return t;
}

}  // namespace

TEST(Fit, ExactRecovery) {
  RngStream rng(1, 0);
  Eigen::VectorXd r(4), p(4);
  r << 1.0, 0.7, 1.9, 1.2;
  p << 0.3, 0.55, 0.8, 0.45;
  const SardineTable t = exact_table(r, p, 3, rng);
  const SardineFit f = fit_sardine(t, 3, 6);
  EXPECT_EQ(f.r(0), 1.0);
  EXPECT_LE((f.r - r).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((f.p_star - p).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(f.rss, 1e-20);
  EXPECT_EQ(f.observations, 16);
}

TEST(Fit, SaturatedDesignHasZeroResidual) {
  // one transition, one age: two parameters, one with r fixed, one observation
  RngStream rng(2, 0);
  SardineTable t = exact_table(Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 0.5), 3, rng);
  t.catches(3, 1) *= 1.7;
  const SardineFit f = fit_sardine(t, 3, 3);
  EXPECT_NEAR(f.rss, 0.0, 1e-24);
  EXPECT_NEAR(f.p_star(0), 0.85, 1e-12);
}

TEST(Fit, ScaleInvariance) {
  const SardineTable t = load_sardine_table(kData / "table3.csv");
  SardineTable scaled = t;
  scaled.catches *= 1000.0;
  const SardineFit a = fit_sardine(t), b = fit_sardine(scaled);
  EXPECT_LE((a.r - b.r).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((a.p_star - b.p_star).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(a.rss, b.rss, 1e-12);
}

TEST(Fit, RelabelledSeasonsGiveSameNumbers) {
  SardineTable t = load_sardine_table(kData / "table3.csv");
  const SardineFit a = fit_sardine(t);
  for (auto& s : t.seasons) s = "x" + s;
  const SardineFit b = fit_sardine(t);
  EXPECT_EQ(a.r, b.r);
  EXPECT_EQ(a.p_star, b.p_star);
  EXPECT_EQ(b.seasons.front().front(), 'x');
}

TEST(Fit, MatchesGridSearchOracle) {
  const SardineTable t = load_sardine_table(kData / "table3.csv");
  const SardineFit f = fit_sardine(t);
  EXPECT_NEAR(sardine_log_rss(t, f), f.rss, 1e-12);
  EXPECT_LE(f.rss, oracle::sardine_grid_search(t, 3, 6) + 1e-9);
  // perturbing any parameter cannot lower the residual
  for (Eigen::Index k = 1; k < f.r.size(); ++k) {
    SardineFit g = f;
    g.r(k) *= 1.01;
    EXPECT_GT(sardine_log_rss(t, g), f.rss);
  }
}

TEST(Fit, MissingCatchIsDataError) {
  SardineTable t = load_sardine_table(kData / "table3.csv");
  t.catches(t.age_row(4), 2) = 0.0;
  try {
    fit_sardine(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::data);
  }
  EXPECT_THROW(fit_sardine(t, 6, 3), Error);
  EXPECT_THROW(fit_sardine(t, 3, 40), Error);
}

TEST(Predict, NoiselessDataReproduced) {
  RngStream rng(3, 0);
  Eigen::VectorXd r(3), p(4);
  r << 1.0, 1.4, 0.6;
  p << 0.5, 0.5, 0.9, 0.2;
  const SardineTable t = exact_table(r, p, 3, rng);
  const SardineFit f = fit_sardine(t);
  const SardineTable n = predict_sardine(t, f);
  for (Eigen::Index s = 1; s < 4; ++s)
    for (int age = 4; age <= 7; ++age)
      EXPECT_NEAR(n.catches(n.age_row(age), s), t.catches(t.age_row(age), s), 1e-9 * t.catches(t.age_row(age), s));
  EXPECT_TRUE(std::isnan(n.catches(n.age_row(2), 1)));
  EXPECT_TRUE(std::isnan(n.catches(n.age_row(4), 0)));
}

TEST(Predict, IdentityParametersShiftDiagonally) {
  const SardineTable t = load_sardine_table(kData / "table3.csv");
  SardineFit f = fit_sardine(t);
  f.r.setOnes();
  f.p_star.setOnes();
  const SardineTable n = predict_sardine(t, f);
  for (Eigen::Index s = 0; s + 1 < static_cast<Eigen::Index>(t.seasons.size()); ++s)
    for (int age = 3; age <= 6; ++age)
      EXPECT_EQ(n.catches(n.age_row(age + 1), s + 1), t.catches(t.age_row(age), s));
}

TEST(Table, RoundTripThroughMatrix) {
  const SardineTable t = load_sardine_table(kData / "table3.csv");
  const SardineTable back = SardineTable::from_matrix(t.to_matrix());
  EXPECT_EQ(back.ages, t.ages);
  EXPECT_EQ(back.seasons, t.seasons);
  EXPECT_EQ(back.catches, t.catches);
  EXPECT_EQ(t.age_row(99), -1);
}
