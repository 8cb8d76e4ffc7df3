#pragma once

// Interval construction: split and transductive conformal prediction, the
// naive interventional-only baseline, weighted transductive CP with a learned
// density ratio, the two-stage weighted split method (inexact and exact
// second stages), and the propensity-weighted baseline.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "drcp/dataset.hpp"
#include "drcp/density_ratio.hpp"
#include "drcp/predictors.hpp"
#include "drcp/stats_core.hpp"

namespace drcp {

/// Closed interval [lower, upper]; either end may be infinite.
struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  Interval() = default;
  Interval(double lo, double hi) : lower(lo), upper(hi) {
    if (std::isnan(lo) || std::isnan(hi) || lo > hi) throw std::invalid_argument("Interval: need lower <= upper");
  }

  static Interval unbounded() { return {-kInf, kInf}; }
  static Interval centered(double center, double half_width) {
    if (std::isinf(half_width)) return unbounded();
    return {center - half_width, center + half_width};
  }

  double width() const { return upper - lower; }
  bool is_finite() const { return std::isfinite(lower) && std::isfinite(upper); }
  bool contains(double v) const { return lower <= v && v <= upper; }
  bool contains(const Interval& other) const { return lower <= other.lower && other.upper <= upper; }
  bool operator==(const Interval&) const = default;
};

/// Evenly spaced candidate outcomes for transductive methods.
struct YGrid {
  double lo = 0.0;
  double hi = 1.0;
  int n_points = 200;

  YGrid() = default;
  YGrid(double lo_, double hi_, int n) : lo(lo_), hi(hi_), n_points(n) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw std::invalid_argument("YGrid: need lo < hi");
    if (n < 2) throw std::invalid_argument("YGrid: need at least two points");
  }

  std::vector<double> points() const {
    std::vector<double> out(static_cast<std::size_t>(n_points));
    const double step = (hi - lo) / (n_points - 1);
    for (int i = 0; i < n_points; ++i) out[static_cast<std::size_t>(i)] = lo + step * i;
    out.back() = hi;
    return out;
  }

  double step() const { return (hi - lo) / (n_points - 1); }

  /// [min - pad * range, max + pad * range] over the given outcomes.
  static YGrid around(std::span<const double> y, int n_points = 200, double pad = 0.25) {
    if (y.empty()) throw std::invalid_argument("YGrid::around: no outcomes");
    const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    double range = *mx - *mn;
    if (!(range > 0.0)) range = std::max(1.0, std::abs(*mn));
    return {*mn - pad * range, *mx + pad * range, n_points};
  }

  /// Same spacing density, extent grown by `factor` around the centre.
  YGrid widened(double factor) const {
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo) * factor;
    return {c - h, c + h, static_cast<int>(std::ceil((n_points - 1) * factor)) + 1};
  }
};

/// Accepted grid values of a transductive method and their hull. An empty
/// accepted set is a degenerate result (no hull), not an error.
struct TransductiveResult {
  std::optional<Interval> hull;
  std::vector<double> accepted;
  bool touches_lower_edge = false;
  bool touches_upper_edge = false;

  bool degenerate() const { return accepted.empty(); }
  bool touches_edge() const { return touches_lower_edge || touches_upper_edge; }
};

namespace detail {

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

inline Vector absolute_residuals(const Regressor& model, const Dataset& data) {
  const Vector pred = model.predict(data.x);
  return (data.y - pred).cwiseAbs();
}

inline TransductiveResult collect(const std::vector<double>& grid, const std::vector<char>& accept) {
  TransductiveResult out;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (accept[i]) out.accepted.push_back(grid[i]);
  if (!out.accepted.empty()) {
    out.hull = Interval(out.accepted.front(), out.accepted.back());
    out.touches_lower_edge = accept.front() != 0;
    out.touches_upper_edge = accept.back() != 0;
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Split conformal

/// Split CP: one fit on the training fold, absolute-residual scores on the
/// calibration fold, quantile level (1 - alpha)(1 + 1/|cal|).
class SplitConformal {
 public:
  SplitConformal(const Dataset& train, const Dataset& cal, double alpha, const RegressorSpec& spec)
      : SplitConformal(fit_checked(train, spec), cal, alpha) {}

  SplitConformal(Regressor model, const Dataset& cal, double alpha) : model_(std::move(model)) {
    detail::check_alpha(alpha);
    if (cal.empty()) throw std::invalid_argument("split conformal: empty calibration set");
    const Vector scores = detail::absolute_residuals(model_, cal);
    const double n = static_cast<double>(cal.size());
    q_ = empirical_quantile(std::span<const double>(scores.data(), cal.size()), (1.0 - alpha) * (1.0 + 1.0 / n)).value;
  }

  Interval interval(std::span<const double> x) const { return Interval::centered(model_.predict(x), q_); }
  double half_width() const { return q_; }
  const Regressor& model() const { return model_; }

 private:
  static Regressor fit_checked(const Dataset& train, const RegressorSpec& spec) {
    if (train.empty()) throw std::invalid_argument("split conformal: empty training set");
    return fit_regressor(spec, train);
  }

  Regressor model_;
  double q_ = 0.0;
};

inline Interval scp_interval(const Dataset& train, const Dataset& cal, std::span<const double> x_test, double alpha,
                             const RegressorSpec& spec) {
  return SplitConformal(train, cal, alpha, spec).interval(x_test);
}

/// First floor(fraction * n) rows train, the rest calibrate. Both folds must
/// be nonempty.
inline std::pair<Dataset, Dataset> split_by_fraction(const Dataset& data, double fraction) {
  if (data.size() < 2) throw std::invalid_argument("split: need at least two samples");
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split: fraction must lie in (0, 1)");
  auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(data.size())));
  k = std::clamp<std::size_t>(k, 1, data.size() - 1);
  return {data.slice(0, k), data.slice(k, data.size())};
}

/// Split CP on interventional data only.
inline Interval naive_interval(const Dataset& intr, std::span<const double> x_test, double alpha,
                               const RegressorSpec& spec, double split_fraction = 0.5) {
  const auto [train, cal] = split_by_fraction(intr, split_fraction);
  return scp_interval(train, cal, x_test, alpha, spec);
}

// ---------------------------------------------------------------------------
// Transductive conformal

/// Full CP: for each grid value, refit on the augmented data and accept when
/// the test score is at most the (1 - alpha) quantile of
/// (1/(n+1)) sum delta_{s_i} + (1/(n+1)) delta_inf.
inline TransductiveResult tcp_interval(const Dataset& data, std::span<const double> x_test, double alpha,
                                       const YGrid& grid, const RegressorSpec& spec) {
  detail::check_alpha(alpha);
  if (data.empty()) throw std::invalid_argument("tcp: empty data");
  if (x_test.size() != data.dim()) throw std::invalid_argument("tcp: dimension mismatch");
  const std::vector<double> ys = grid.points();
  if (ys.empty()) throw std::invalid_argument("tcp: empty grid");
  const AugmentedFitter fitter(spec, data);
  const double n = static_cast<double>(data.size());
  const double level = (1.0 - alpha) * (n + 1.0) / n;
  std::vector<char> accept(ys.size(), 0);
  for (std::size_t g = 0; g < ys.size(); ++g) {
    const Regressor model = fitter.fit_with(x_test, ys[g]);
    const Vector scores = detail::absolute_residuals(model, data);
    const double s_test = std::abs(ys[g] - model.predict(x_test));
    const double q = empirical_quantile(std::span<const double>(scores.data(), data.size()), level).value;
    accept[g] = s_test <= q;
  }
  return detail::collect(ys, accept);
}

/// Weighted transductive CP with density-ratio weights. Observational ratios
/// are fixed; the test ratio is re-evaluated at every candidate outcome.
inline TransductiveResult wtcp_dr_interval(const Dataset& obs, const RatioModel& ratio_model,
                                           std::span<const double> x_test, double alpha, const YGrid& grid,
                                           const RegressorSpec& spec) {
  detail::check_alpha(alpha);
  if (obs.empty()) throw std::invalid_argument("wtcp: empty observational data");
  if (x_test.size() != obs.dim()) throw std::invalid_argument("wtcp: dimension mismatch");
  const std::vector<double> ys = grid.points();
  if (ys.empty()) throw std::invalid_argument("wtcp: empty grid");
  const std::vector<double> obs_ratios = ratio_model.ratios(obs);
  const AugmentedFitter fitter(spec, obs);
  std::vector<char> accept(ys.size(), 0);
  for (std::size_t g = 0; g < ys.size(); ++g) {
    const Regressor model = fitter.fit_with(x_test, ys[g]);
    const Vector scores = detail::absolute_residuals(model, obs);
    const double s_test = std::abs(ys[g] - model.predict(x_test));
    const WeightedScoreTable table(std::span<const double>(scores.data(), obs.size()), obs_ratios);
    const double q = table.quantile(ratio_model.ratio(x_test, ys[g]), 1.0 - alpha).value;
    accept[g] = s_test <= q;
  }
  return detail::collect(ys, accept);
}

// ---------------------------------------------------------------------------
// Two-stage weighted split conformal

struct FirstStageEntry {
  std::vector<double> x;
  double y = 0.0;
  double lower = 0.0;
  double upper = 0.0;

  bool infinite() const { return !std::isfinite(lower) || !std::isfinite(upper); }
};

/// Per-interventional-sample intervals [C_j^L, C_j^R].
struct FirstStageIntervals {
  std::vector<FirstStageEntry> entries;
  std::size_t input_dim = 0;

  std::size_t size() const { return entries.size(); }
  std::size_t infinite_count() const {
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.infinite(); }));
  }
};

struct FirstStageOptions {
  // Fit the base model once on the observational fit set instead of refitting
  // with each interventional sample appended.
  bool shared_fit = false;
};

/// For every interventional (x_j, y_j): fit on obs_fit plus that sample,
/// score obs_cal, weight scores by r(x_i, y_i) with r(x_j, y_j) as the test
/// ratio, and take the (1 - alpha) weighted quantile q_j.
/// C_j = [mu(x_j) - q_j, mu(x_j) + q_j].
inline FirstStageIntervals wscp_dr_first_stage(const Dataset& obs_fit, const Dataset& obs_cal, const Dataset& intr,
                                               const RatioModel& ratio_model, double alpha,
                                               const RegressorSpec& spec, FirstStageOptions options = {}) {
  detail::check_alpha(alpha);
  if (obs_fit.empty() || obs_cal.empty() || intr.empty())
    throw std::invalid_argument("wscp first stage: observational and interventional sets must be nonempty");
  if (obs_fit.dim() != intr.dim() || obs_cal.dim() != intr.dim())
    throw std::invalid_argument("wscp first stage: dimension mismatch");
  const std::vector<double> cal_ratios = ratio_model.ratios(obs_cal);
  const AugmentedFitter fitter(spec, obs_fit);

  std::optional<Regressor> shared;
  std::optional<WeightedScoreTable> shared_table;
  if (options.shared_fit) {
    shared = fit_regressor(spec, obs_fit);
    const Vector scores = detail::absolute_residuals(*shared, obs_cal);
    shared_table.emplace(std::span<const double>(scores.data(), obs_cal.size()), cal_ratios);
  }

  FirstStageIntervals out;
  out.input_dim = intr.dim();
  out.entries.reserve(intr.size());
  std::vector<double> xj;
  for (std::size_t j = 0; j < intr.size(); ++j) {
    row_span(intr.x, static_cast<Eigen::Index>(j), xj);
    const double yj = intr.y[static_cast<Eigen::Index>(j)];
    const double test_ratio = ratio_model.ratio(xj, yj);
    double center, q;
    if (options.shared_fit) {
      center = shared->predict(xj);
      q = shared_table->quantile(test_ratio, 1.0 - alpha).value;
    } else {
      const Regressor model = fitter.fit_with(xj, yj);
      const Vector scores = detail::absolute_residuals(model, obs_cal);
      const WeightedScoreTable table(std::span<const double>(scores.data(), obs_cal.size()), cal_ratios);
      center = model.predict(xj);
      q = table.quantile(test_ratio, 1.0 - alpha).value;
    }
    const Interval c = Interval::centered(center, q);
    out.entries.push_back({xj, yj, c.lower, c.upper});
  }
  return out;
}

/// Single-dataset form: the observational data both fits the model and
/// supplies the scores.
inline FirstStageIntervals wscp_dr_first_stage(const Dataset& obs, const Dataset& intr, const RatioModel& ratio_model,
                                               double alpha, const RegressorSpec& spec,
                                               FirstStageOptions options = {}) {
  return wscp_dr_first_stage(obs, obs, intr, ratio_model, alpha, spec, options);
}

struct SecondStageInterval {
  Interval interval;
  bool crossed = false;    // bound regressors predicted lower > upper; swapped
  bool collapsed = false;  // negative offset inverted the interval; set to the midpoint
};

namespace detail {

struct BoundRegressors {
  Regressor lower;
  Regressor upper;
  std::size_t used = 0;
  std::size_t excluded = 0;
};

inline BoundRegressors fit_bounds(const FirstStageIntervals& first, std::size_t begin, std::size_t end,
                                  const RegressorSpec& spec) {
  std::vector<std::size_t> keep;
  for (std::size_t i = begin; i < end; ++i)
    if (!first.entries[i].infinite()) keep.push_back(i);
  if (keep.empty()) throw std::invalid_argument("wscp second stage: every first-stage interval is infinite");
  const auto k = static_cast<Eigen::Index>(keep.size());
  Matrix x(k, static_cast<Eigen::Index>(first.input_dim));
  Vector lo(k), hi(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto& e = first.entries[keep[static_cast<std::size_t>(r)]];
    for (std::size_t c = 0; c < first.input_dim; ++c) x(r, static_cast<Eigen::Index>(c)) = e.x[c];
    lo[r] = e.lower;
    hi[r] = e.upper;
  }
  return {fit_regressor(spec, x, lo), fit_regressor(spec, x, hi), keep.size(), (end - begin) - keep.size()};
}

inline SecondStageInterval bounded(double lo_pred, double hi_pred, double offset) {
  SecondStageInterval out;
  if (lo_pred > hi_pred) {
    std::swap(lo_pred, hi_pred);
    out.crossed = true;
  }
  if (std::isinf(offset) && offset > 0) {
    out.interval = Interval::unbounded();
    return out;
  }
  double lo = lo_pred - offset, hi = hi_pred + offset;
  if (lo > hi) {
    lo = hi = 0.5 * (lo_pred + hi_pred);
    out.collapsed = true;
  }
  out.interval = Interval(lo, hi);
  return out;
}

}  // namespace detail

/// Second stage without calibration: regress the first-stage bounds on x.
/// Infinite first-stage intervals are left out of the regression.
class WscpInexact {
 public:
  WscpInexact(const FirstStageIntervals& first, const RegressorSpec& spec)
      : bounds_(detail::fit_bounds(first, 0, first.size(), spec)) {}

  SecondStageInterval interval(std::span<const double> x) const {
    return detail::bounded(bounds_.lower.predict(x), bounds_.upper.predict(x), 0.0);
  }
  std::size_t excluded() const { return bounds_.excluded; }

 private:
  detail::BoundRegressors bounds_;
};

/// Calibrated second stage: bound regressors on entries [0, split), scores
/// max{mL(x_i) - C_i^L, C_i^R - mR(x_i)} on [split, m), offset at level
/// (1 - alpha)(1 + 1/(m - split)).
class WscpExact {
 public:
  WscpExact(const FirstStageIntervals& first, std::size_t split_index, double alpha, const RegressorSpec& spec)
      : bounds_(make_bounds(first, split_index, alpha, spec)) {
    std::vector<double> scores;
    scores.reserve(first.size() - split_index);
    for (std::size_t i = split_index; i < first.size(); ++i) {
      const auto& e = first.entries[i];
      if (e.infinite()) {
        scores.push_back(kInf);
        continue;
      }
      scores.push_back(std::max(bounds_.lower.predict(e.x) - e.lower, e.upper - bounds_.upper.predict(e.x)));
    }
    const double m_cal = static_cast<double>(scores.size());
    q_ = empirical_quantile(scores, (1.0 - alpha) * (1.0 + 1.0 / m_cal)).value;
  }

  SecondStageInterval interval(std::span<const double> x) const {
    return detail::bounded(bounds_.lower.predict(x), bounds_.upper.predict(x), q_);
  }
  double offset() const { return q_; }
  std::size_t excluded() const { return bounds_.excluded; }

 private:
  static detail::BoundRegressors make_bounds(const FirstStageIntervals& first, std::size_t split_index, double alpha,
                                             const RegressorSpec& spec) {
    detail::check_alpha(alpha);
    if (split_index < 1 || split_index >= first.size())
      throw std::invalid_argument("wscp exact: split index must leave both parts nonempty");
    return detail::fit_bounds(first, 0, split_index, spec);
  }

  detail::BoundRegressors bounds_;
  double q_ = 0.0;
};

inline SecondStageInterval wscp_dr_inexact(const FirstStageIntervals& first, std::span<const double> x_test,
                                           const RegressorSpec& spec) {
  return WscpInexact(first, spec).interval(x_test);
}

inline SecondStageInterval wscp_dr_exact(const FirstStageIntervals& first, std::size_t split_index,
                                         std::span<const double> x_test, double alpha, const RegressorSpec& spec) {
  return WscpExact(first, split_index, alpha, spec).interval(x_test);
}

// ---------------------------------------------------------------------------
// Propensity-weighted split conformal (baseline)

/// Plain logistic propensity model: unbalanced classes so that predicted
/// probabilities keep their scale.
inline ClassifierSpec default_propensity_spec() {
  ClassifierSpec s;
  s.feature_map = FeatureMap::identity;
  s.balance_classes = false;
  return s;
}

/// Weighted split CP on arm t with weights 1 / p(T = t | x), normalized with
/// the test point's own weight sent to +inf.
class PropensityWeightedConformal {
 public:
  PropensityWeightedConformal(const Dataset& obs_train, const Dataset& obs_cal, int arm, double alpha,
                              const RegressorSpec& spec, const ClassifierSpec& propensity_spec)
      : arm_(arm), alpha_(alpha), propensity_(fit_propensity(obs_train, arm, propensity_spec)),
        model_(fit_regressor(spec, checked_arm(obs_train, arm, "training"))),
        table_(build_table(obs_cal)) {
    detail::check_alpha(alpha);
  }

  /// 1 / p(T = arm | x)
  double weight(std::span<const double> x) const {
    const double p1 = propensity_.predict_proba(x);
    return 1.0 / (arm_ == 1 ? p1 : 1.0 - p1);
  }

  Interval interval(std::span<const double> x) const {
    const double q = table_.quantile(weight(x), 1.0 - alpha_).value;
    return Interval::centered(model_.predict(x), q);
  }

  const Regressor& model() const { return model_; }

 private:
  static Dataset checked_arm(const Dataset& obs, int arm, const char* what) {
    Dataset a = obs.where_treatment(arm);
    if (a.empty()) throw std::invalid_argument(std::string("wcp: no ") + what + " rows in the target arm");
    return a;
  }

  static Classifier fit_propensity(const Dataset& obs_train, int arm, const ClassifierSpec& spec) {
    if (arm != 0 && arm != 1) throw std::invalid_argument("wcp: treatment must be 0 or 1");
    if (!obs_train.has_treatment()) throw std::invalid_argument("wcp: observational data lacks treatments");
    return fit_classifier(spec, obs_train.x, obs_train.t);
  }

  WeightedScoreTable build_table(const Dataset& obs_cal) const {
    const Dataset cal = checked_arm(obs_cal, arm_, "calibration");
    const Vector scores = detail::absolute_residuals(model_, cal);
    std::vector<double> w(cal.size());
    std::vector<double> buf;
    for (std::size_t i = 0; i < cal.size(); ++i) w[i] = weight(row_span(cal.x, static_cast<Eigen::Index>(i), buf));
    return WeightedScoreTable(std::span<const double>(scores.data(), cal.size()), w);
  }

  int arm_;
  double alpha_;
  Classifier propensity_;
  Regressor model_;
  WeightedScoreTable table_;
};

/// Splits `obs` by `split_fraction` into training and calibration folds.
inline Interval wcp_propensity_interval(const Dataset& obs, int arm, std::span<const double> x_test, double alpha,
                                        const RegressorSpec& spec, const ClassifierSpec& propensity_spec,
                                        double split_fraction = 0.5) {
  const auto [train, cal] = split_by_fraction(obs, split_fraction);
  return PropensityWeightedConformal(train, cal, arm, alpha, spec, propensity_spec).interval(x_test);
}

}  // namespace drcp
