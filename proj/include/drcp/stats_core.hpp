#pragma once

// Empirical and weighted empirical quantiles over conformity scores.
//
// Quantiles are left-continuous inf-type: the smallest score whose
// cumulative mass reaches the requested level. A level counts as reached
// when the cumulative mass is within kLevelTolerance of it, so that levels
// such as 0.9 * (1 + 1/9) that are 1 in exact arithmetic behave as 1.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace drcp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLevelTolerance = 1e-10;
inline constexpr double kWeightTolerance = 1e-9;

struct QuantileResult {
  double value = 0.0;  // a score from the distribution, or +inf
  double level_used = 0.0;

  bool is_infinite() const { return std::isinf(value); }
};

/// |y - y_hat|
inline double absolute_residual_score(double y, double y_hat) {
  if (!std::isfinite(y) || !std::isfinite(y_hat))
    throw std::invalid_argument("absolute_residual_score: non-finite input");
  return std::abs(y - y_hat);
}

/// Smallest s with #{scores <= s} / n >= level; +inf when level > 1.
/// Scores may contain +inf (treated as a point mass at infinity) but not NaN.
inline QuantileResult empirical_quantile(std::span<const double> scores, double level) {
  if (scores.empty()) throw std::invalid_argument("empirical_quantile: empty scores");
  if (!(level > 0.0)) throw std::invalid_argument("empirical_quantile: level must be positive");
  for (double s : scores)
    if (std::isnan(s) || s == -kInf) throw std::invalid_argument("empirical_quantile: invalid score");
  if (level > 1.0 + kLevelTolerance) return {kInf, level};

  const auto n = static_cast<double>(scores.size());
  // smallest k with k / n >= level - tol
  auto k = static_cast<std::size_t>(std::ceil(n * (level - kLevelTolerance)));
  k = std::clamp<std::size_t>(k, 1, scores.size());
  std::vector<double> sorted(scores.begin(), scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  return {sorted[k - 1], level};
}

struct WeightedScore {
  double score;
  double weight;
};

/// Discrete distribution sum_i w_i delta_{s_i} + p_inf delta_{+inf}.
class ScoreDistribution {
 public:
  ScoreDistribution() = default;

  /// Takes weights that already sum (with the infinity mass) to one.
  ScoreDistribution(std::vector<WeightedScore> entries, double infinity_mass)
      : entries_(std::move(entries)), infinity_mass_(infinity_mass) {
    validate();
  }

  /// Normalizes nonnegative raw weights by their total (including the
  /// infinity weight).
  static ScoreDistribution normalize(std::span<const double> scores, std::span<const double> raw_weights,
                                     double raw_infinity_weight) {
    if (scores.size() != raw_weights.size())
      throw std::invalid_argument("ScoreDistribution::normalize: size mismatch");
    double total = raw_infinity_weight;
    for (double w : raw_weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("ScoreDistribution::normalize: bad weight");
      total += w;
    }
    if (!(raw_infinity_weight >= 0.0) || !(total > 0.0))
      throw std::invalid_argument("ScoreDistribution::normalize: weights must have positive total");
    std::vector<WeightedScore> entries(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) entries[i] = {scores[i], raw_weights[i] / total};
    return ScoreDistribution(std::move(entries), raw_infinity_weight / total);
  }

  static ScoreDistribution uniform(std::span<const double> scores, bool with_infinity_point) {
    std::vector<double> w(scores.size(), 1.0);
    return normalize(scores, w, with_infinity_point ? 1.0 : 0.0);
  }

  const std::vector<WeightedScore>& entries() const { return entries_; }
  double infinity_mass() const { return infinity_mass_; }

  double finite_mass() const {
    double s = 0.0;
    for (const auto& e : entries_) s += e.weight;
    return s;
  }

 private:
  void validate() const {
    double total = infinity_mass_;
    if (!(infinity_mass_ >= 0.0)) throw std::invalid_argument("ScoreDistribution: negative infinity mass");
    for (const auto& e : entries_) {
      if (!std::isfinite(e.score) || e.score < 0.0)
        throw std::invalid_argument("ScoreDistribution: scores must be finite and nonnegative");
      if (!(e.weight >= 0.0)) throw std::invalid_argument("ScoreDistribution: negative weight");
      total += e.weight;
    }
    if (total > 1.0 + kWeightTolerance) throw std::invalid_argument("ScoreDistribution: weights sum above one");
  }

  std::vector<WeightedScore> entries_;
  double infinity_mass_ = 0.0;
};

/// Smallest score whose cumulative weight reaches `level`; +inf when the
/// finite mass never does.
inline QuantileResult weighted_quantile(const ScoreDistribution& dist, double level) {
  if (!(level > 0.0) || level > 1.0 + kLevelTolerance)
    throw std::invalid_argument("weighted_quantile: level must lie in (0, 1]");
  std::vector<WeightedScore> sorted = dist.entries();
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
  double cum = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cum += sorted[i].weight;
    // mass of ties is accumulated before testing
    if (i + 1 < sorted.size() && sorted[i + 1].score == sorted[i].score) continue;
    if (cum >= level - kLevelTolerance) return {sorted[i].score, level};
  }
  return {kInf, level};
}

/// Sorted scores with prefix sums of raw (unnormalized) weights, for
/// repeated quantile queries where only the extra test-point weight varies.
/// The implied distribution is sum_i w_i delta_{s_i} + w_test delta_inf,
/// normalized by sum_i w_i + w_test.
class WeightedScoreTable {
 public:
  WeightedScoreTable(std::span<const double> scores, std::span<const double> raw_weights) {
    if (scores.size() != raw_weights.size()) throw std::invalid_argument("WeightedScoreTable: size mismatch");
    if (scores.empty()) throw std::invalid_argument("WeightedScoreTable: empty scores");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    scores_.reserve(order.size());
    cumulative_.reserve(order.size());
    double cum = 0.0;
    for (std::size_t i : order) {
      const double w = raw_weights[i];
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("WeightedScoreTable: bad weight");
      if (!std::isfinite(scores[i]) || scores[i] < 0.0)
        throw std::invalid_argument("WeightedScoreTable: bad score");
      cum += w;
      scores_.push_back(scores[i]);
      cumulative_.push_back(cum);
    }
  }

  double total_weight() const { return cumulative_.back(); }

  QuantileResult quantile(double raw_test_weight, double level) const {
    if (!(level > 0.0) || level > 1.0 + kLevelTolerance)
      throw std::invalid_argument("WeightedScoreTable: level must lie in (0, 1]");
    const double denom = total_weight() + raw_test_weight;
    if (!(denom > 0.0)) throw std::invalid_argument("WeightedScoreTable: zero total weight");
    // cumulative_[k] / denom >= level - tol; the last index of a tie run is
    // found automatically because ties share one score value.
    const double target = (level - kLevelTolerance) * denom;
    auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), target);
    if (it == cumulative_.end()) return {kInf, level};
    return {scores_[static_cast<std::size_t>(it - cumulative_.begin())], level};
  }

 private:
  std::vector<double> scores_;
  std::vector<double> cumulative_;
};

}  // namespace drcp
