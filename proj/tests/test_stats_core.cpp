#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "drcp/stats_core.hpp"

using namespace drcp;

namespace {

// Sort-and-scan reference: smallest score whose cumulative weight reaches
// `level`, +inf if the finite mass never does.
double scan_quantile(std::vector<std::pair<double, double>> sw, double level) {
  std::sort(sw.begin(), sw.end());
  double cum = 0.0;
  for (std::size_t i = 0; i < sw.size(); ++i) {
    cum += sw[i].second;
    const bool last_of_tie = i + 1 == sw.size() || sw[i + 1].first != sw[i].first;
    if (last_of_tie && cum >= level - 1e-10) return sw[i].first;
  }
  return kInf;
}

std::vector<double> random_scores(std::mt19937_64& rng, std::size_t n, bool with_ties) {
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_int_distribution<int> k(0, 4);
  std::vector<double> s(n);
  for (auto& v : s) v = with_ties ? static_cast<double>(k(rng)) : u(rng);
  return s;
}

}  // namespace

TEST(AbsoluteResidual, Examples) {
  EXPECT_EQ(absolute_residual_score(3.0, 3.0), 0.0);
  EXPECT_EQ(absolute_residual_score(1.5, 2.0), 0.5);
  EXPECT_EQ(absolute_residual_score(-2.0, 1.0), 3.0);
  EXPECT_THROW(absolute_residual_score(std::nan(""), 1.0), std::invalid_argument);
  EXPECT_THROW(absolute_residual_score(1.0, kInf), std::invalid_argument);
}

TEST(EmpiricalQuantile, Examples) {
  const std::vector<double> nine = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_EQ(empirical_quantile(nine, 0.9 * (1.0 + 1.0 / 9.0)).value, 9.0);
  const std::vector<double> four = {1, 2, 3, 4};
  EXPECT_EQ(empirical_quantile(four, 0.5).value, 2.0);
  const std::vector<double> fives = {5, 5, 5};
  EXPECT_TRUE(empirical_quantile(fives, 1.2).is_infinite());
}

TEST(EmpiricalQuantile, RejectsBadInput) {
  EXPECT_THROW(empirical_quantile(std::vector<double>{}, 0.5), std::invalid_argument);
  EXPECT_THROW(empirical_quantile(std::vector<double>{1.0, std::nan("")}, 0.5), std::invalid_argument);
  EXPECT_THROW(empirical_quantile(std::vector<double>{1.0}, 0.0), std::invalid_argument);
}

TEST(WeightedQuantile, Examples) {
  EXPECT_EQ(weighted_quantile(ScoreDistribution({{1, .25}, {2, .25}, {3, .25}, {4, .25}}, 0.0), 0.5).value, 2.0);
  EXPECT_TRUE(weighted_quantile(ScoreDistribution({{1, 0.5}}, 0.5), 0.9).is_infinite());
  EXPECT_EQ(weighted_quantile(ScoreDistribution({{10, .2}, {20, .3}, {30, .5}}, 0.0), 0.4).value, 20.0);
}

TEST(ScoreDistribution, Validation) {
  EXPECT_THROW(ScoreDistribution({{1.0, 0.7}}, 0.7), std::invalid_argument);
  EXPECT_THROW(ScoreDistribution({{-1.0, 0.5}}, 0.5), std::invalid_argument);
  EXPECT_THROW(ScoreDistribution({{1.0, -0.1}}, 0.0), std::invalid_argument);
  EXPECT_THROW(ScoreDistribution({{kInf, 0.5}}, 0.5), std::invalid_argument);
}

TEST(ScoreDistribution, NormalizeSumsToOne) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 1 + rng() % 30;
    const auto s = random_scores(rng, n, false);
    std::vector<double> w(n);
    for (auto& v : w) v = u(rng);
    const double wt = u(rng);
    const auto d = ScoreDistribution::normalize(s, w, wt);
    double total = d.infinity_mass();
    for (const auto& e : d.entries()) {
      EXPECT_GE(e.weight, 0.0);
      total += e.weight;
    }
    ASSERT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(WeightedQuantile, MatchesScanOracleWithTies) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 1 + rng() % 10;
    const auto s = random_scores(rng, n, true);
    std::vector<double> w(n);
    for (auto& v : w) v = u(rng) + 0.01;
    const double wt = u(rng);
    const auto d = ScoreDistribution::normalize(s, w, wt);
    std::vector<std::pair<double, double>> sw;
    for (const auto& e : d.entries()) sw.emplace_back(e.score, e.weight);
    const double level = 0.05 + 0.9 * u(rng);
    ASSERT_EQ(weighted_quantile(d, level).value, scan_quantile(sw, level)) << "rep " << rep;
  }
}

TEST(WeightedQuantile, UniformWeightsReduceToEmpirical) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 1 + rng() % 50;
    const auto s = random_scores(rng, n, rep % 2 == 0);
    const auto d = ScoreDistribution::uniform(s, false);
    const double level = 0.01 + 0.99 * u(rng);
    ASSERT_EQ(weighted_quantile(d, level).value, empirical_quantile(s, level).value) << "rep " << rep;
  }
}

TEST(WeightedQuantile, MonotoneInLevel) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 1 + rng() % 20;
    const auto s = random_scores(rng, n, rep % 3 == 0);
    std::vector<double> w(n);
    for (auto& v : w) v = u(rng) + 1e-3;
    const auto d = ScoreDistribution::normalize(s, w, u(rng));
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    a = std::max(a, 1e-6);
    b = std::max(b, a);
    ASSERT_LE(weighted_quantile(d, a).value, weighted_quantile(d, b).value);
  }
}

TEST(WeightedQuantile, PermutationInvariant) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng() % 15;
    auto s = random_scores(rng, n, true);
    std::vector<double> w(n);
    for (auto& v : w) v = u(rng) + 0.01;
    const double level = u(rng) * 0.98 + 0.01;
    const double before = weighted_quantile(ScoreDistribution::normalize(s, w, 0.3), level).value;
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    std::shuffle(p.begin(), p.end(), rng);
    std::vector<double> s2(n), w2(n);
    for (std::size_t i = 0; i < n; ++i) {
      s2[i] = s[p[i]];
      w2[i] = w[p[i]];
    }
    ASSERT_EQ(weighted_quantile(ScoreDistribution::normalize(s2, w2, 0.3), level).value, before);
  }
}

TEST(WeightedScoreTable, AgreesWithDistribution) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 1 + rng() % 40;
    const auto s = random_scores(rng, n, rep % 2 == 0);
    std::vector<double> w(n);
    for (auto& v : w) v = 5.0 * u(rng) + 0.01;
    const double wt = 5.0 * u(rng) + 0.01;
    const double level = 0.01 + 0.98 * u(rng);
    const WeightedScoreTable table(s, w);
    ASSERT_EQ(table.quantile(wt, level).value,
              weighted_quantile(ScoreDistribution::normalize(s, w, wt), level).value);
  }
}
