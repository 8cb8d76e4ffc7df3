#pragma once

// Experiment orchestration: per repetition, draw (or reshuffle) data, fit every
// requested method on its prescribed splits, score the test points per arm and
// for the ITE, then aggregate across repetitions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "drcp/conformal.hpp"
#include "drcp/dataset.hpp"
#include "drcp/density_ratio.hpp"
#include "drcp/harness/metrics.hpp"
#include "drcp/ite.hpp"
#include "drcp/synthetic.hpp"

namespace drcp {

enum class Method { naive, wcp, wtcp_dr, wscp_dr_inexact, wscp_dr_exact, wscp_dr_star_inexact, wscp_dr_star_exact };

inline constexpr std::array<Method, 7> kAllMethods = {Method::naive,          Method::wcp,
                                                      Method::wtcp_dr,        Method::wscp_dr_inexact,
                                                      Method::wscp_dr_exact,  Method::wscp_dr_star_inexact,
                                                      Method::wscp_dr_star_exact};

inline std::string to_string(Method m) {
  switch (m) {
    case Method::naive: return "naive";
    case Method::wcp: return "wcp";
    case Method::wtcp_dr: return "wtcp_dr";
    case Method::wscp_dr_inexact: return "wscp_dr_inexact";
    case Method::wscp_dr_exact: return "wscp_dr_exact";
    case Method::wscp_dr_star_inexact: return "wscp_dr_star_inexact";
    case Method::wscp_dr_star_exact: return "wscp_dr_star_exact";
  }
  return "?";
}

inline Method method_from_string(std::string_view s) {
  for (Method m : kAllMethods)
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

enum class Target { y0, y1, ite };

inline std::string to_string(Target t) {
  switch (t) {
    case Target::y0: return "y0";
    case Target::y1: return "y1";
    case Target::ite: return "ite";
  }
  return "?";
}

/// Sizes per arm for the interventional parts; observational sizes are totals.
struct Splits {
  int n_tr = 5000;
  int n_cal = 5000;
  int m_tr = 125;
  int m_cal = 125;
  int m_ts = 200;
};

struct ExperimentConfig {
  std::vector<Method> methods = {Method::naive, Method::wcp, Method::wscp_dr_inexact, Method::wscp_dr_exact};
  double alpha = 0.1;
  bool split_alpha = false;  // run each arm at alpha / 2
  Splits splits;
  SyntheticConfig synthetic;  // sizes come from `splits`
  // CSV source: rows tagged obs / int / test. Splits are fractions of each part.
  std::optional<Dataset> csv_data;
  double csv_train_fraction = 0.5;
  int reps = 10;
  std::uint64_t seed = 0;
  RegressorSpec base;
  ClassifierSpec ratio_classifier;
  ClassifierSpec propensity = default_propensity_spec();
  int grid_points = 200;
  // wtcp_dr is scored on the first this-many test points of each repetition.
  int wtcp_test_points = 20;
  bool shared_fit = false;

  bool uses(Method m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }

  void validate() const {
    if (methods.empty()) throw std::invalid_argument("config: no methods selected");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("config: alpha must lie in (0, 1)");
    if (reps < 1) throw std::invalid_argument("config: reps must be positive");
    if (grid_points < 2) throw std::invalid_argument("config: grid_points must be at least 2");
    if (wtcp_test_points < 1) throw std::invalid_argument("config: wtcp_test_points must be positive");
    base.validate();
    ratio_classifier.validate();
    propensity.validate();
    if (csv_data) {
      if (!(csv_train_fraction > 0.0 && csv_train_fraction < 1.0))
        throw std::invalid_argument("config: csv_train_fraction must lie in (0, 1)");
      const Dataset& data = *csv_data;
      data.validate();
      if (!data.has_treatment() || data.role.empty())
        throw std::invalid_argument("config: CSV data needs t and role columns");
      std::array<int, 3> obs{}, intr{}, test{};
      for (std::size_t i = 0; i < data.size(); ++i) {
        const int t = data.t[i];
        switch (data.role[i]) {
          case Role::observational: ++obs[static_cast<std::size_t>(t)]; break;
          case Role::interventional: ++intr[static_cast<std::size_t>(t)]; break;
          case Role::test: ++test[static_cast<std::size_t>(t)]; break;
        }
      }
      for (int arm = 0; arm < 2; ++arm) {
        const auto a = static_cast<std::size_t>(arm);
        if (obs[a] < 4) throw std::invalid_argument("config: CSV needs at least 4 observational rows per arm");
        if (intr[a] < 4) throw std::invalid_argument("config: CSV needs at least 4 interventional rows per arm");
        if (test[a] < 1) throw std::invalid_argument("config: CSV needs test rows for each arm");
      }
    } else {
      synthetic.validate();
      const Splits& s = splits;
      if (s.n_tr < 1 || s.n_cal < 1 || s.m_ts < 1) throw std::invalid_argument("config: split sizes must be positive");
      if (s.m_tr < 2 || s.m_cal < 1) throw std::invalid_argument("config: need m_tr >= 2 and m_cal >= 1");
    }
  }
};

/// One row of the per-repetition output.
struct RepRecord {
  Method method;
  Target target;
  int rep = 0;
  std::size_t n_points = 0;
  double coverage = 0.0;
  double width = 0.0;         // +inf if any interval is unbounded
  double finite_width = 0.0;  // mean over bounded intervals
  std::size_t infinite = 0;
  std::size_t empty = 0;  // transductive: no accepted grid value
};

struct SummaryRow {
  Method method;
  Target target;
  int reps = 0;
  double coverage_mean = 0.0;
  double coverage_std = 0.0;
  double width_mean = 0.0;  // +inf when any repetition had an unbounded interval
  double width_std = 0.0;
  double finite_width_mean = 0.0;
  std::size_t infinite = 0;
  std::size_t empty = 0;
};

struct ExperimentReport {
  std::vector<RepRecord> records;  // sorted by (method, target, rep)
  std::vector<SummaryRow> summary;

  const SummaryRow& at(Method m, Target t) const {
    for (const auto& s : summary)
      if (s.method == m && s.target == t) return s;
    throw std::out_of_range("report: no row for " + to_string(m) + "/" + to_string(t));
  }
  bool has(Method m, Target t) const {
    return std::any_of(summary.begin(), summary.end(), [&](const SummaryRow& s) { return s.method == m && s.target == t; });
  }
};

/// Data for one repetition, already split.
struct RepData {
  Dataset obs_tr, obs_cal;        // both arms, with t
  std::array<Dataset, 2> intr;    // per arm; first m_tr[arm] rows train
  std::array<std::size_t, 2> m_tr{};
  std::array<Dataset, 2> test;    // per arm: x and the arm's outcome
  std::optional<Vector> ite;      // when both potential outcomes are known on shared test x
};

namespace detail {

inline RepData synthetic_rep(const ExperimentConfig& cfg, std::uint64_t seed) {
  SyntheticConfig sc = cfg.synthetic;
  sc.n_obs = cfg.splits.n_tr + cfg.splits.n_cal;
  sc.m_int = cfg.splits.m_tr + cfg.splits.m_cal;
  sc.n_test = cfg.splits.m_ts;
  sc.target_treatment.reset();
  sc.seed = seed;
  CausalSampleSet s = generate_synthetic(sc);
  RepData rd;
  const auto ntr = static_cast<std::size_t>(cfg.splits.n_tr);
  rd.obs_tr = s.observational.slice(0, ntr);
  rd.obs_cal = s.observational.slice(ntr, s.observational.size());
  for (int arm = 0; arm < 2; ++arm) {
    const auto a = static_cast<std::size_t>(arm);
    rd.intr[a] = std::move(s.interventional[a]);
    rd.m_tr[a] = static_cast<std::size_t>(cfg.splits.m_tr);
    rd.test[a] = test_rows(s.test, arm);
  }
  rd.ite = s.test.ite;
  return rd;
}

inline Dataset shuffled(const Dataset& d, Rng& rng) {
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  return d.subset(idx);
}

inline std::size_t split_point(std::size_t n, double fraction) {
  auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

inline RepData csv_rep(const ExperimentConfig& cfg, std::uint64_t seed) {
  const Dataset& data = *cfg.csv_data;
  Rng rng(seed);
  RepData rd;
  const Dataset obs = shuffled(data.where_role(Role::observational), rng);
  const std::size_t k = split_point(obs.size(), cfg.csv_train_fraction);
  rd.obs_tr = obs.slice(0, k);
  rd.obs_cal = obs.slice(k, obs.size());
  const Dataset intr = data.where_role(Role::interventional);
  const Dataset test = data.where_role(Role::test);
  for (int arm = 0; arm < 2; ++arm) {
    const auto a = static_cast<std::size_t>(arm);
    rd.intr[a] = shuffled(intr.where_treatment(arm), rng);
    rd.m_tr[a] = split_point(rd.intr[a].size(), cfg.csv_train_fraction);
    rd.test[a] = test.where_treatment(arm);
  }
  return rd;
}

struct ArmIntervals {
  std::map<Method, std::vector<Interval>> intervals;
  std::map<Method, std::vector<char>> empty;  // transductive only
};

inline bool is_star(Method m) { return m == Method::wscp_dr_star_inexact || m == Method::wscp_dr_star_exact; }

/// Transductive interval with one widen-and-retry when the accepted set is
/// empty or reaches the grid edge. Still-empty results come back as nullopt.
inline std::optional<Interval> wtcp_with_retry(const Dataset& obs, const RatioModel& ratio, std::span<const double> x,
                                               double alpha, const YGrid& grid, const RegressorSpec& spec) {
  TransductiveResult r = wtcp_dr_interval(obs, ratio, x, alpha, grid, spec);
  if (r.degenerate() || r.touches_edge()) {
    const TransductiveResult wide = wtcp_dr_interval(obs, ratio, x, alpha, grid.widened(2.0), spec);
    if (!wide.degenerate()) r = wide;
  }
  if (r.degenerate()) return std::nullopt;
  return *r.hull;
}

inline ArmIntervals run_arm(const ExperimentConfig& cfg, const RepData& rd, int arm, double alpha) {
  const auto a = static_cast<std::size_t>(arm);
  const Dataset& intr = rd.intr[a];
  const std::size_t m_tr = rd.m_tr[a];
  const Dataset intr_tr = intr.slice(0, m_tr);
  const Dataset intr_cal = intr.slice(m_tr, intr.size());
  const Dataset obs_tr = rd.obs_tr.where_treatment(arm);
  const Dataset obs_cal = rd.obs_cal.where_treatment(arm);
  if (obs_tr.empty() || obs_cal.empty()) throw std::runtime_error("experiment: an observational fold lacks the arm");
  const Dataset& test = rd.test[a];
  const std::size_t nt = test.size();
  ArmIntervals out;
  std::vector<double> buf;

  auto each_test = [&](auto&& fn, std::size_t limit) {
    std::vector<Interval> v;
    v.reserve(std::min(nt, limit));
    for (std::size_t i = 0; i < std::min(nt, limit); ++i) v.push_back(fn(row_span(test.x, static_cast<Eigen::Index>(i), buf)));
    return v;
  };

  if (cfg.uses(Method::naive)) {
    const SplitConformal naive(intr_tr, intr_cal, alpha, cfg.base);
    out.intervals[Method::naive] = each_test([&](auto x) { return naive.interval(x); }, nt);
  }
  if (cfg.uses(Method::wcp)) {
    const PropensityWeightedConformal wcp(rd.obs_tr, rd.obs_cal, arm, alpha, cfg.base, cfg.propensity);
    out.intervals[Method::wcp] = each_test([&](auto x) { return wcp.interval(x); }, nt);
  }

  const bool joint = cfg.uses(Method::wtcp_dr) || cfg.uses(Method::wscp_dr_inexact) || cfg.uses(Method::wscp_dr_exact);
  const bool star = cfg.uses(Method::wscp_dr_star_inexact) || cfg.uses(Method::wscp_dr_star_exact);
  for (int variant = 0; variant < 2; ++variant) {
    if ((variant == 0 && !joint) || (variant == 1 && !star)) continue;
    const RatioModel ratio = variant == 0 ? fit_density_ratio(obs_tr, intr_tr, cfg.ratio_classifier)
                                          : fit_covariate_ratio(obs_tr, intr_tr, cfg.ratio_classifier);
    const Method inexact = variant == 0 ? Method::wscp_dr_inexact : Method::wscp_dr_star_inexact;
    const Method exact = variant == 0 ? Method::wscp_dr_exact : Method::wscp_dr_star_exact;
    if (cfg.uses(inexact) || cfg.uses(exact)) {
      const FirstStageIntervals first =
          wscp_dr_first_stage(obs_tr, obs_cal, intr, ratio, alpha, cfg.base, FirstStageOptions{cfg.shared_fit});
      if (cfg.uses(inexact)) {
        const WscpInexact w(first, cfg.base);
        out.intervals[inexact] = each_test([&](auto x) { return w.interval(x).interval; }, nt);
      }
      if (cfg.uses(exact)) {
        const WscpExact w(first, m_tr, alpha, cfg.base);
        out.intervals[exact] = each_test([&](auto x) { return w.interval(x).interval; }, nt);
      }
    }
    if (variant == 0 && cfg.uses(Method::wtcp_dr)) {
      const Dataset pooled = concat(obs_tr, intr);
      const YGrid grid = YGrid::around(std::span<const double>(pooled.y.data(), pooled.size()), cfg.grid_points);
      std::vector<char> empty;
      auto& v = out.intervals[Method::wtcp_dr];
      const auto limit = std::min(nt, static_cast<std::size_t>(cfg.wtcp_test_points));
      for (std::size_t i = 0; i < limit; ++i) {
        const auto x = row_span(test.x, static_cast<Eigen::Index>(i), buf);
        const auto c = wtcp_with_retry(obs_tr, ratio, x, alpha, grid, cfg.base);
        // An empty accepted set is a zero-width interval that covers nothing.
        v.push_back(c ? *c : Interval(0.0, 0.0));
        empty.push_back(!c);
      }
      out.empty[Method::wtcp_dr] = std::move(empty);
    }
  }
  return out;
}

inline RepRecord score(Method m, Target t, int rep, std::span<const Interval> iv, std::span<const double> truth,
                       const std::vector<char>* empty) {
  RepRecord r{m, t, rep};
  r.n_points = iv.size();
  std::vector<Interval> kept;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < iv.size(); ++i) {
    if (empty && (*empty)[i]) {
      ++r.empty;
      kept.emplace_back(0.0, 0.0);
      continue;
    }
    hit += iv[i].contains(truth[i]);
    kept.push_back(iv[i]);
  }
  r.coverage = static_cast<double>(hit) / static_cast<double>(iv.size());
  const WidthSummary w = mean_width(kept);
  r.width = w.mean;
  r.finite_width = w.finite_mean;
  r.infinite = w.infinite;
  return r;
}

}  // namespace detail

/// Intervals for one repetition.
inline std::vector<RepRecord> run_repetition(const ExperimentConfig& cfg, int rep) {
  const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep));
  const RepData rd = cfg.csv_data ? detail::csv_rep(cfg, seed) : detail::synthetic_rep(cfg, seed);
  const double alpha = per_arm_alpha(cfg.alpha, cfg.split_alpha);
  std::array<detail::ArmIntervals, 2> arms = {detail::run_arm(cfg, rd, 0, alpha), detail::run_arm(cfg, rd, 1, alpha)};

  std::vector<RepRecord> out;
  for (Method m : kAllMethods) {
    if (!cfg.uses(m)) continue;
    std::array<const std::vector<char>*, 2> empties{};
    for (int arm = 0; arm < 2; ++arm) {
      const auto a = static_cast<std::size_t>(arm);
      const auto& iv = arms[a].intervals.at(m);
      const auto e = arms[a].empty.find(m);
      empties[a] = e == arms[a].empty.end() ? nullptr : &e->second;
      const Vector& y = rd.test[a].y;
      out.push_back(detail::score(m, arm ? Target::y1 : Target::y0, rep, iv,
                                  std::span<const double>(y.data(), iv.size()), empties[a]));
    }
    if (!rd.ite) continue;
    const auto& c0 = arms[0].intervals.at(m);
    const auto& c1 = arms[1].intervals.at(m);
    std::vector<Interval> ite;
    std::vector<char> ite_empty;
    ite.reserve(c0.size());
    for (std::size_t i = 0; i < c0.size(); ++i) {
      const bool e = (empties[0] && (*empties[0])[i]) || (empties[1] && (*empties[1])[i]);
      ite_empty.push_back(e);
      ite.push_back(e ? Interval(0.0, 0.0) : bonferroni_ite(c1[i], c0[i], alpha, alpha).as_interval());
    }
    const bool any_empty = empties[0] || empties[1];
    out.push_back(detail::score(m, Target::ite, rep, ite, std::span<const double>(rd.ite->data(), ite.size()),
                                any_empty ? &ite_empty : nullptr));
  }
  return out;
}

inline std::vector<SummaryRow> summarize(const std::vector<RepRecord>& records) {
  std::map<std::pair<Method, Target>, std::vector<const RepRecord*>> groups;
  for (const auto& r : records) groups[{r.method, r.target}].push_back(&r);
  std::vector<SummaryRow> out;
  for (const auto& [key, rs] : groups) {
    SummaryRow s{key.first, key.second};
    s.reps = static_cast<int>(rs.size());
    const double n = static_cast<double>(rs.size());
    double cov = 0.0, wid = 0.0, fin = 0.0;
    std::size_t fin_n = 0;
    for (const auto* r : rs) {
      cov += r->coverage;
      wid += r->width;
      if (std::isfinite(r->finite_width)) {
        fin += r->finite_width;
        ++fin_n;
      }
      s.infinite += r->infinite;
      s.empty += r->empty;
    }
    s.coverage_mean = cov / n;
    s.width_mean = wid / n;
    s.finite_width_mean = fin_n ? fin / static_cast<double>(fin_n) : std::nan("");
    double cv = 0.0, wv = 0.0;
    for (const auto* r : rs) {
      cv += (r->coverage - s.coverage_mean) * (r->coverage - s.coverage_mean);
      if (std::isfinite(s.width_mean)) wv += (r->width - s.width_mean) * (r->width - s.width_mean);
    }
    s.coverage_std = rs.size() > 1 ? std::sqrt(cv / (n - 1.0)) : 0.0;
    s.width_std = !std::isfinite(s.width_mean) ? std::nan("") : rs.size() > 1 ? std::sqrt(wv / (n - 1.0)) : 0.0;
    out.push_back(s);
  }
  return out;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  for (int rep = 0; rep < cfg.reps; ++rep) {
    auto rs = run_repetition(cfg, rep);
    report.records.insert(report.records.end(), rs.begin(), rs.end());
  }
  std::stable_sort(report.records.begin(), report.records.end(), [](const RepRecord& a, const RepRecord& b) {
    return std::tie(a.method, a.target, a.rep) < std::tie(b.method, b.target, b.rep);
  });
  report.summary = summarize(report.records);
  return report;
}

enum class SweepParam { d, m };

struct SweepPoint {
  double value = 0.0;
  ExperimentReport report;
};

/// d: feature dimension. m: interventional size per arm, split evenly between
/// the training and calibration parts.
inline std::vector<SweepPoint> run_sweep(const ExperimentConfig& base, SweepParam param, const std::vector<int>& values) {
  if (values.empty()) throw std::invalid_argument("sweep: no values");
  if (base.csv_data) throw std::invalid_argument("sweep: needs the synthetic source");
  std::vector<ExperimentConfig> cfgs;
  for (int v : values) {
    ExperimentConfig c = base;
    if (param == SweepParam::d) {
      c.synthetic.d = v;
    } else {
      c.splits.m_tr = v / 2;
      c.splits.m_cal = v - v / 2;
    }
    c.validate();  // fail before running anything
    cfgs.push_back(std::move(c));
  }
  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < cfgs.size(); ++i) out.push_back({static_cast<double>(values[i]), run_experiment(cfgs[i])});
  return out;
}

}  // namespace drcp
