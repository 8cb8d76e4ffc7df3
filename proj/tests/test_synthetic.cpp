#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "drcp/harness/csv.hpp"
#include "drcp/synthetic.hpp"

using namespace drcp;

namespace {

double normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

// E[clamp(0.1 + 0.8 U, 0, 1)] for U ~ N(0, 1) by the trapezoid rule.
double treated_fraction_quadrature() {
  const double lo = -10.0, hi = 10.0;
  const int n = 200000;
  const double h = (hi - lo) / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double u = lo + h * i;
    const double f = std::clamp(0.1 + 0.8 * u, 0.0, 1.0) * normal_pdf(u);
    s += (i == 0 || i == n) ? 0.5 * f : f;
  }
  return s * h;
}

double column_var(const Matrix& x, Eigen::Index k) {
  const double m = x.col(k).mean();
  return (x.col(k).array() - m).square().sum() / static_cast<double>(x.rows() - 1);
}

}  // namespace

TEST(Synthetic, TreatedFractionMatchesQuadrature) {
  const double expected = treated_fraction_quadrature();
  EXPECT_NEAR(expected, 0.3194, 5e-4);
  SyntheticConfig cfg;
  cfg.n_obs = 100000;
  cfg.m_int = 10;
  cfg.n_test = 10;
  cfg.seed = 1;
  const auto s = generate_synthetic(cfg);
  double treated = 0.0;
  for (int t : s.observational.t) treated += t;
  EXPECT_NEAR(treated / cfg.n_obs, expected, 0.01);
}

TEST(Synthetic, MeanEffectForLargeDimension) {
  SyntheticConfig cfg;
  cfg.d = 100;
  cfg.n_obs = 10;
  cfg.m_int = 10;
  cfg.n_test = 2000;
  cfg.seed = 2;
  const auto s = generate_synthetic(cfg);
  const double expected = sigmoid(6.0) - sigmoid(-6.0);
  EXPECT_NEAR(s.test.ite.mean(), expected, 0.01);
}

TEST(Synthetic, NoiselessOutcomesFollowLatent) {
  SyntheticConfig cfg;
  cfg.d = 3;
  cfg.noise_scale = 0.0;
  cfg.n_obs = 500;
  cfg.seed = 3;
  const auto s = generate_synthetic(cfg);
  for (Eigen::Index i = 0; i < 500; ++i) {
    const double ub = s.observational_u_bar[i];
    ASSERT_NEAR(ub, s.observational_u.row(i).mean(), 1e-12);
    const double expected = s.observational.t[static_cast<std::size_t>(i)] ? sigmoid(3.0 * (ub + 2.0)) : sigmoid(3.0 * (ub - 2.0));
    ASSERT_EQ(s.observational.y[i], expected);
  }
}

TEST(Synthetic, SameSeedIsBitIdentical) {
  SyntheticConfig cfg;
  cfg.d = 2;
  cfg.n_obs = 300;
  cfg.m_int = 40;
  cfg.n_test = 30;
  cfg.seed = 99;
  const auto a = generate_synthetic(cfg);
  const auto b = generate_synthetic(cfg);
  EXPECT_TRUE(a.observational.x == b.observational.x);
  EXPECT_TRUE(a.observational.y == b.observational.y);
  EXPECT_EQ(a.observational.t, b.observational.t);
  for (int arm = 0; arm < 2; ++arm) {
    EXPECT_TRUE(a.interventional[arm].x == b.interventional[arm].x);
    EXPECT_TRUE(a.interventional[arm].y == b.interventional[arm].y);
  }
  EXPECT_TRUE(a.test.x == b.test.x);
  EXPECT_TRUE(a.test.ite == b.test.ite);
  cfg.seed = 100;
  EXPECT_FALSE(generate_synthetic(cfg).observational.y == a.observational.y);
}

TEST(Synthetic, LatentMeanVarianceShrinksWithDimension) {
  for (int d : {1, 4, 16}) {
    SyntheticConfig cfg;
    cfg.d = d;
    cfg.n_obs = 20000;
    cfg.seed = 4;
    const auto s = generate_synthetic(cfg);
    const Vector& ub = s.observational_u_bar;
    const double var = (ub.array() - ub.mean()).square().sum() / (ub.size() - 1);
    EXPECT_NEAR(var * d, 1.0, 0.05) << "d=" << d;
  }
}

TEST(Synthetic, InterventionalFeaturesFollowMarginal) {
  SyntheticConfig cfg;
  cfg.n_obs = 20000;
  cfg.m_int = 10000;
  cfg.seed = 5;
  const auto s = generate_synthetic(cfg);
  Matrix intr(20000, 1);
  intr << s.interventional[0].x, s.interventional[1].x;
  const double sd = std::sqrt(column_var(s.observational.x, 0));
  const double se = sd * std::sqrt(1.0 / 20000 + 1.0 / 20000);
  EXPECT_NEAR(intr.col(0).mean(), s.observational.x.col(0).mean(), 4.0 * se);
  EXPECT_NEAR(std::sqrt(column_var(intr, 0)) / sd, 1.0, 0.05);
}

TEST(Synthetic, ArmShiftShrinksWithDimension) {
  // |Var(X | T = 1) / Var(X) - 1|, averaged over coordinates
  std::vector<double> stat;
  for (int d : {1, 5, 25}) {
    SyntheticConfig cfg;
    cfg.d = d;
    cfg.n_obs = 60000;
    cfg.seed = 6;
    const auto s = generate_synthetic(cfg);
    const Dataset treated = s.observational.where_treatment(1);
    double v = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) v += std::abs(column_var(treated.x, k) / column_var(s.observational.x, k) - 1.0);
    stat.push_back(v / d);
  }
  EXPECT_GT(stat[0], stat[1]);
  EXPECT_GT(stat[1], stat[2]);
}

TEST(Synthetic, TargetTreatmentRestrictsArms) {
  SyntheticConfig cfg;
  cfg.n_obs = 50;
  cfg.m_int = 20;
  cfg.target_treatment = 1;
  const auto s = generate_synthetic(cfg);
  EXPECT_TRUE(s.interventional[0].empty());
  EXPECT_EQ(s.interventional[1].size(), 20u);
  EXPECT_EQ(s.interventional[1].t, std::vector<int>(20, 1));
}

TEST(Synthetic, ConfigValidation) {
  SyntheticConfig cfg;
  cfg.c = 1.5;
  EXPECT_THROW(generate_synthetic(cfg), std::invalid_argument);
  cfg = {};
  cfg.d = 0;
  EXPECT_THROW(generate_synthetic(cfg), std::invalid_argument);
  cfg = {};
  cfg.target_treatment = 2;
  EXPECT_THROW(generate_synthetic(cfg), std::invalid_argument);
}

TEST(Synthetic, CsvRoundTripIsBitIdentical) {
  SyntheticConfig cfg;
  cfg.d = 3;
  cfg.n_obs = 200;
  cfg.m_int = 20;
  cfg.seed = 7;
  const auto s = generate_synthetic(cfg);
  const Dataset all = concat(concat(s.observational, s.interventional[0]), test_rows(s.test, 1));
  std::stringstream buf;
  write_csv_dataset(buf, all);
  const Dataset back = read_csv_dataset(buf);
  EXPECT_TRUE(back.x == all.x);
  EXPECT_TRUE(back.y == all.y);
  EXPECT_EQ(back.t, all.t);
  EXPECT_EQ(back.role, all.role);
}
