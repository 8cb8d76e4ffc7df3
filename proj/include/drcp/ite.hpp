#pragma once

// Individual treatment effect intervals from per-arm outcome intervals.

#include <cmath>
#include <limits>
#include <stdexcept>

#include "drcp/conformal.hpp"

namespace drcp {

struct ITEInterval {
  double lower = 0.0;
  double upper = 0.0;
  // Miscoverage level each arm was built at; NaN when not recorded.
  double alpha_0 = std::numeric_limits<double>::quiet_NaN();
  double alpha_1 = std::numeric_limits<double>::quiet_NaN();

  double width() const { return upper - lower; }
  bool contains(double v) const { return lower <= v && v <= upper; }
  Interval as_interval() const { return {lower, upper}; }
};

/// [C1.lower - C0.upper, C1.upper - C0.lower]. Infinite bounds propagate.
inline ITEInterval bonferroni_ite(const Interval& treated, const Interval& control,
                                  double alpha_1 = std::numeric_limits<double>::quiet_NaN(),
                                  double alpha_0 = std::numeric_limits<double>::quiet_NaN()) {
  if (std::isnan(treated.lower) || std::isnan(treated.upper) || treated.lower > treated.upper ||
      std::isnan(control.lower) || std::isnan(control.upper) || control.lower > control.upper)
    throw std::invalid_argument("bonferroni_ite: invalid interval");
  ITEInterval out;
  out.lower = treated.lower - control.upper;
  out.upper = treated.upper - control.lower;
  out.alpha_0 = alpha_0;
  out.alpha_1 = alpha_1;
  return out;
}

/// Per-arm level: the caller's alpha, or alpha / 2 for a guaranteed
/// 1 - alpha joint level.
inline double per_arm_alpha(double alpha, bool split_alpha) { return split_alpha ? alpha / 2.0 : alpha; }

}  // namespace drcp
