#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "drcp/density_ratio.hpp"

using namespace drcp;

namespace {

Dataset normal_rows(std::mt19937_64& rng, int n, double mean, double sd) {
  std::normal_distribution<double> g(mean, sd);
  Matrix x(n, 1);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = g(rng);
    y[i] = 0.0;
  }
  return Dataset(x, y);
}

}  // namespace

TEST(DensityRatio, SameDistributionMeanIsOne) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  auto draw = [&](int n) {
    Matrix x(n, 1);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = g(rng);
      y[i] = x(i, 0) + g(rng);
    }
    return Dataset(x, y);
  };
  const Dataset obs = draw(500), intr = draw(500);
  const RatioModel r = fit_density_ratio(obs, intr, ClassifierSpec{});
  const auto ratios = r.ratios(draw(2000));
  double mean = 0.0;
  for (double v : ratios) mean += v;
  EXPECT_NEAR(mean / ratios.size(), 1.0, 0.15);
}

TEST(DensityRatio, MeanShiftMatchesAnalyticLogRatio) {
  std::mt19937_64 rng(2);
  const Dataset obs = normal_rows(rng, 4000, 0.0, 1.0);
  const Dataset intr = normal_rows(rng, 4000, 1.0, 1.0);
  const RatioModel r = fit_covariate_ratio(obs, intr, ClassifierSpec{});
  // log N(x; 1, 1) - log N(x; 0, 1) = x - 1/2
  double err = 0.0;
  int k = 0;
  for (double x = -2.0; x <= 3.0 + 1e-9; x += 0.1, ++k) {
    const double xs[] = {x};
    err += std::abs(std::log(r.ratio(xs, 0.0)) - (x - 0.5));
  }
  EXPECT_LT(err / k, 0.2);
}

TEST(DensityRatio, SeparatedClassesHitClampBounds) {
  Matrix xo(50, 1), xi(50, 1);
  for (int i = 0; i < 50; ++i) {
    xo(i, 0) = -5.0 - i * 0.1;
    xi(i, 0) = 5.0 + i * 0.1;
  }
  ClassifierSpec spec;
  spec.feature_map = FeatureMap::identity;
  const RatioModel r = fit_covariate_ratio(xo, xi, spec);
  const double far_obs[] = {-100.0}, far_int[] = {100.0};
  EXPECT_NEAR(r.ratio(far_obs, 0.0), r.clamp_low(), 1e-12);
  EXPECT_NEAR(r.ratio(far_int, 0.0), r.clamp_high(), 1e-12);
  for (double v : r.ratios(Dataset(xo, Vector::Zero(50)))) EXPECT_TRUE(std::isfinite(v));
}

TEST(DensityRatio, RatioFromClassifierOutput) {
  ClassifierSpec spec;
  spec.feature_map = FeatureMap::identity;
  // input (x, y): logit = w . (x, y)
  const RatioModel half(Classifier::from_coefficients(spec, 2, Vector::Zero(2), 0.0), true, 1);
  const double x[] = {0.3};
  EXPECT_DOUBLE_EQ(half.ratio(x, 1.0), 1.0);

  const RatioModel at_clamp(Classifier::from_coefficients(spec, 2, Vector::Zero(2), 50.0), true, 1);
  EXPECT_NEAR(at_clamp.ratio(x, 1.0), 0.01 / 0.99, 1e-12);
  const RatioModel at_other(Classifier::from_coefficients(spec, 2, Vector::Zero(2), -50.0), true, 1);
  EXPECT_NEAR(at_other.ratio(x, 1.0), 99.0, 1e-9);
}

TEST(DensityRatio, SwappedLabelsGiveReciprocal) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    Vector w(2);
    w << 0.5 * g(rng), 0.5 * g(rng);
    const double b = 0.3 * g(rng);
    ClassifierSpec spec;
    spec.feature_map = FeatureMap::identity;
    const RatioModel r(Classifier::from_coefficients(spec, 2, w, b), true, 1);
    const RatioModel s(Classifier::from_coefficients(spec, 2, -w, -b), true, 1);
    const double x[] = {g(rng)};
    const double y = g(rng);
    ASSERT_NEAR(r.ratio(x, y) * s.ratio(x, y), 1.0, 1e-9);
  }
}

TEST(CovariateRatio, SameDistributionMeanIsOne) {
  std::mt19937_64 rng(4);
  const RatioModel r = fit_covariate_ratio(normal_rows(rng, 1000, 0, 1), normal_rows(rng, 1000, 0, 1), ClassifierSpec{});
  const auto ratios = r.ratios(normal_rows(rng, 2000, 0, 1));
  double mean = 0.0;
  for (double v : ratios) mean += v;
  EXPECT_NEAR(mean / ratios.size(), 1.0, 0.15);
}

TEST(CovariateRatio, VarianceShiftAtZero) {
  std::mt19937_64 rng(5);
  // p_I(0) / p_O(0) for N(0, 4) over N(0, 1) is 1/2
  const RatioModel r = fit_covariate_ratio(normal_rows(rng, 5000, 0, 1), normal_rows(rng, 5000, 0, 2), ClassifierSpec{});
  const double zero[] = {0.0};
  EXPECT_NEAR(r.ratio(zero, 0.0), 0.5, 0.15);
}

TEST(CovariateRatio, IgnoresOutcome) {
  std::mt19937_64 rng(6);
  const RatioModel r = fit_covariate_ratio(normal_rows(rng, 300, 0, 1), normal_rows(rng, 300, 1, 1), ClassifierSpec{});
  const double x[] = {0.4};
  EXPECT_EQ(r.ratio(x, -100.0), r.ratio(x, 100.0));
  EXPECT_FALSE(r.uses_outcome());
}

TEST(NormalizedWeights, Examples) {
  const std::vector<double> ones = {1, 1, 1};
  const auto u = normalized_weights(ones, 1.0);
  for (double w : u.obs_weights) EXPECT_DOUBLE_EQ(w, 0.25);
  EXPECT_DOUBLE_EQ(u.test_weight, 0.25);

  const std::vector<double> two = {1, 1};
  const auto v = normalized_weights(two, 2.0);
  EXPECT_DOUBLE_EQ(v.obs_weights[0], 0.25);
  EXPECT_DOUBLE_EQ(v.obs_weights[1], 0.25);
  EXPECT_DOUBLE_EQ(v.test_weight, 0.5);
  EXPECT_THROW(normalized_weights(two, 0.0), std::invalid_argument);
  EXPECT_THROW(normalized_weights(std::vector<double>{}, 1.0), std::invalid_argument);
}

TEST(NormalizedWeights, SimplexAndScaleInvariance) {
  std::mt19937_64 rng(7);
  std::lognormal_distribution<double> ln(0.0, 2.0);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<double> r(n);
    for (auto& v : r) v = ln(rng);
    const double t = ln(rng);
    const auto w = normalized_weights(r, t);
    double total = w.test_weight;
    for (double v : w.obs_weights) {
      ASSERT_GE(v, 0.0);
      total += v;
    }
    ASSERT_NEAR(total, 1.0, 1e-9);
    const double c = scale(rng);
    std::vector<double> rc(n);
    for (std::size_t i = 0; i < n; ++i) rc[i] = c * r[i];
    const auto wc = normalized_weights(rc, c * t);
    for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(wc.obs_weights[i], w.obs_weights[i], 1e-9);
    ASSERT_NEAR(wc.test_weight, w.test_weight, 1e-9);
  }
}

TEST(EffectiveSampleSize, Examples) {
  EXPECT_NEAR(effective_sample_size(std::vector<double>(50, 3.7)), 50.0, 1e-9);
  std::vector<double> dom(100, 1e-6);
  dom[0] = 1.0;
  EXPECT_NEAR(effective_sample_size(dom), 1.0, 1e-3);
  // (1 + 2 + 3)^2 / (1 + 4 + 9)
  EXPECT_NEAR(effective_sample_size(std::vector<double>{1, 2, 3}), 36.0 / 14.0, 1e-12);
}
