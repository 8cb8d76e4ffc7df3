#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "drcp/conformal.hpp"

namespace drcp {

/// Fraction of i with lower_i <= truth_i <= upper_i.
inline double coverage(std::span<const Interval> intervals, std::span<const double> truths) {
  if (intervals.size() != truths.size()) throw std::invalid_argument("coverage: length mismatch");
  if (intervals.empty()) throw std::invalid_argument("coverage: empty input");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < intervals.size(); ++i) hit += intervals[i].contains(truths[i]);
  return static_cast<double>(hit) / static_cast<double>(intervals.size());
}

struct WidthSummary {
  double mean = 0.0;         // +inf when any interval is unbounded
  double finite_mean = 0.0;  // over the bounded intervals only; NaN if none
  std::size_t infinite = 0;

  bool has_infinite() const { return infinite > 0; }
};

inline WidthSummary mean_width(std::span<const Interval> intervals) {
  if (intervals.empty()) throw std::invalid_argument("mean_width: empty input");
  WidthSummary out;
  double sum = 0.0;
  std::size_t finite = 0;
  for (const Interval& c : intervals) {
    if (c.is_finite()) {
      sum += c.width();
      ++finite;
    } else {
      ++out.infinite;
    }
  }
  out.finite_mean = finite ? sum / static_cast<double>(finite) : std::nan("");
  out.mean = out.infinite ? kInf : out.finite_mean;
  return out;
}

}  // namespace drcp
