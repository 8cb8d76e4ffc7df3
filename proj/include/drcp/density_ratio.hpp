#pragma once

// Density ratio r(x, y) = p_I(x, y) / p_O(x, y) by probabilistic
// classification of observational (z = 1) against interventional (z = 0)
// rows, plus the normalized conformal weights it induces.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "drcp/dataset.hpp"
#include "drcp/predictors.hpp"

namespace drcp {

class RatioModel {
 public:
  using RatioFunction = std::function<double(std::span<const double> x, double y)>;

  /// Wraps a fitted classifier trained with z = 1 on observational rows.
  RatioModel(Classifier classifier, bool uses_outcome, std::size_t feature_dim)
      : classifier_(std::make_shared<const Classifier>(std::move(classifier))),
        uses_outcome_(uses_outcome),
        feature_dim_(feature_dim) {
    const double c = classifier_->spec().probability_clamp;
    clamp_low_ = c / (1.0 - c);
    clamp_high_ = (1.0 - c) / c;
    if (classifier_->input_dim() != feature_dim + (uses_outcome ? 1 : 0))
      throw std::invalid_argument("RatioModel: classifier input dimension mismatch");
  }

  /// Wraps an arbitrary ratio function, e.g. an analytic oracle.
  static RatioModel from_function(RatioFunction fn, std::size_t feature_dim, bool uses_outcome,
                                  double clamp_low = std::numeric_limits<double>::min(),
                                  double clamp_high = std::numeric_limits<double>::max()) {
    if (!(clamp_low > 0.0) || !(clamp_high >= clamp_low))
      throw std::invalid_argument("RatioModel: need 0 < clamp_low <= clamp_high");
    return RatioModel(std::move(fn), feature_dim, uses_outcome, clamp_low, clamp_high);
  }

  static RatioModel constant(std::size_t feature_dim, double value = 1.0) {
    return from_function([value](std::span<const double>, double) { return value; }, feature_dim, false);
  }

  double ratio(std::span<const double> x, double y) const {
    if (x.size() != feature_dim_) throw std::invalid_argument("ratio: dimension mismatch");
    double r;
    if (classifier_) {
      double input[65];
      std::vector<double> heap;
      std::span<double> in;
      const std::size_t k = feature_dim_ + (uses_outcome_ ? 1 : 0);
      if (k <= 65) {
        in = std::span<double>(input, k);
      } else {
        heap.resize(k);
        in = heap;
      }
      std::copy(x.begin(), x.end(), in.begin());
      if (uses_outcome_) in[feature_dim_] = y;
      const double p1 = classifier_->predict_proba(in);
      r = (1.0 - p1) / p1;
    } else {
      r = fn_(x, y);
      if (std::isnan(r)) throw std::runtime_error("ratio: function returned NaN");
    }
    return std::clamp(r, clamp_low_, clamp_high_);
  }

  /// Ratios for every row of a dataset.
  std::vector<double> ratios(const Dataset& data) const {
    std::vector<double> out(data.size());
    std::vector<double> buf;
    for (std::size_t i = 0; i < data.size(); ++i)
      out[i] = ratio(row_span(data.x, static_cast<Eigen::Index>(i), buf), data.y[static_cast<Eigen::Index>(i)]);
    return out;
  }

  double clamp_low() const { return clamp_low_; }
  double clamp_high() const { return clamp_high_; }
  bool uses_outcome() const { return uses_outcome_; }
  std::size_t feature_dim() const { return feature_dim_; }
  const Classifier* classifier() const { return classifier_.get(); }

 private:
  RatioModel(RatioFunction fn, std::size_t feature_dim, bool uses_outcome, double lo, double hi)
      : fn_(std::move(fn)), uses_outcome_(uses_outcome), feature_dim_(feature_dim), clamp_low_(lo), clamp_high_(hi) {}

  std::shared_ptr<const Classifier> classifier_;
  RatioFunction fn_;
  bool uses_outcome_ = true;
  std::size_t feature_dim_ = 0;
  double clamp_low_ = 0.0;
  double clamp_high_ = 0.0;
};

namespace detail {

inline RatioModel fit_ratio(const Dataset& obs, const Dataset& intr, const ClassifierSpec& spec, bool uses_outcome) {
  if (obs.empty() || intr.empty()) throw std::invalid_argument("fit_density_ratio: both samples must be nonempty");
  if (obs.dim() != intr.dim()) throw std::invalid_argument("fit_density_ratio: dimension mismatch");
  const auto d = static_cast<Eigen::Index>(obs.dim());
  const Eigen::Index cols = d + (uses_outcome ? 1 : 0);
  const auto no = static_cast<Eigen::Index>(obs.size());
  const auto ni = static_cast<Eigen::Index>(intr.size());
  Matrix stacked(no + ni, cols);
  stacked.block(0, 0, no, d) = obs.x;
  stacked.block(no, 0, ni, d) = intr.x;
  if (uses_outcome) {
    stacked.block(0, d, no, 1) = obs.y;
    stacked.block(no, d, ni, 1) = intr.y;
  }
  std::vector<int> z(static_cast<std::size_t>(no + ni), 0);
  std::fill(z.begin(), z.begin() + no, 1);
  return RatioModel(fit_classifier(spec, stacked, z), uses_outcome, obs.dim());
}

}  // namespace detail

/// Joint (x, y) ratio. The prior factor p(z=1)/p(z=0) is dropped; it cancels
/// in the normalized weights.
inline RatioModel fit_density_ratio(const Dataset& obs, const Dataset& intr, const ClassifierSpec& spec) {
  return detail::fit_ratio(obs, intr, spec, true);
}

/// Covariate-only ratio p_I(x) / p_O(x); the outcome argument is ignored.
inline RatioModel fit_covariate_ratio(const Dataset& obs, const Dataset& intr, const ClassifierSpec& spec) {
  return detail::fit_ratio(obs, intr, spec, false);
}

inline RatioModel fit_covariate_ratio(const Matrix& obs_x, const Matrix& intr_x, const ClassifierSpec& spec) {
  return fit_covariate_ratio(Dataset(obs_x, Vector::Zero(obs_x.rows())), Dataset(intr_x, Vector::Zero(intr_x.rows())),
                             spec);
}

struct NormalizedWeights {
  std::vector<double> obs_weights;
  double test_weight = 0.0;
};

/// p_i = r_i / (sum_j r_j + r_test), test weight r_test / (same).
inline NormalizedWeights normalized_weights(std::span<const double> obs_ratios, double test_ratio) {
  if (obs_ratios.empty()) throw std::invalid_argument("normalized_weights: need at least one ratio");
  double total = test_ratio;
  if (!(test_ratio > 0.0) || !std::isfinite(test_ratio))
    throw std::invalid_argument("normalized_weights: ratios must be positive and finite");
  for (double r : obs_ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("normalized_weights: ratios must be positive and finite");
    total += r;
  }
  NormalizedWeights out;
  out.obs_weights.reserve(obs_ratios.size());
  for (double r : obs_ratios) out.obs_weights.push_back(r / total);
  out.test_weight = test_ratio / total;
  return out;
}

/// (sum r)^2 / sum r^2, in [1, n].
inline double effective_sample_size(std::span<const double> ratios) {
  if (ratios.empty()) throw std::invalid_argument("effective_sample_size: need at least one ratio");
  // scale by the max to keep squares in range
  double mx = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("effective_sample_size: ratios must be positive");
    mx = std::max(mx, r);
  }
  double s = 0.0, s2 = 0.0;
  for (double r : ratios) {
    const double u = r / mx;
    s += u;
    s2 += u * u;
  }
  return std::clamp(s * s / s2, 1.0, static_cast<double>(ratios.size()));
}

}  // namespace drcp
