#pragma once

// Report emission (per-repetition CSV, aggregated JSON) and the JSON config
// file layer. Column names here are fixed; downstream diffs rely on them.

#include <cmath>
#include <ostream>
#include <string>

#include <json.hpp>

#include "drcp/harness/csv.hpp"
#include "drcp/harness/experiment.hpp"

namespace drcp {

inline constexpr const char* kRecordColumns = "method,target,rep,n_points,coverage,width,finite_width,n_infinite,n_empty";

inline void write_records_csv(std::ostream& out, const ExperimentReport& report, const std::string& prefix_header = "",
                              const std::string& prefix_value = "", bool header = true) {
  if (header) out << prefix_header << kRecordColumns << '\n';
  for (const auto& r : report.records) {
    out << prefix_value << to_string(r.method) << ',' << to_string(r.target) << ',' << r.rep << ',' << r.n_points << ','
        << format_double(r.coverage) << ',' << format_double(r.width) << ','
        << (std::isnan(r.finite_width) ? std::string("nan") : format_double(r.finite_width)) << ',' << r.infinite
        << ',' << r.empty << '\n';
  }
}

namespace detail {

// JSON has no infinities; unbounded widths become the string "inf".
inline nlohmann::json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace detail

inline nlohmann::json summary_json(const ExperimentReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : report.summary) {
    rows.push_back({{"method", to_string(s.method)},
                    {"target", to_string(s.target)},
                    {"reps", s.reps},
                    {"coverage_mean", detail::number(s.coverage_mean)},
                    {"coverage_std", detail::number(s.coverage_std)},
                    {"width_mean", detail::number(s.width_mean)},
                    {"width_std", detail::number(s.width_std)},
                    {"finite_width_mean", detail::number(s.finite_width_mean)},
                    {"n_infinite", s.infinite},
                    {"n_empty", s.empty}});
  }
  return rows;
}

inline const char* to_string(FeatureMap m) { return m == FeatureMap::identity ? "identity" : "polynomial_degree2"; }

inline FeatureMap feature_map_from_string(const std::string& s) {
  if (s == "identity") return FeatureMap::identity;
  if (s == "polynomial_degree2") return FeatureMap::polynomial_degree2;
  throw std::invalid_argument("unknown feature map '" + s + "'");
}

inline nlohmann::json config_json(const ExperimentConfig& c) {
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : c.methods) methods.push_back(to_string(m));
  return {{"alpha", c.alpha},
          {"split_alpha", c.split_alpha},
          {"methods", methods},
          {"reps", c.reps},
          {"seed", c.seed},
          {"grid_points", c.grid_points},
          {"wtcp_test_points", c.wtcp_test_points},
          {"shared_fit", c.shared_fit},
          {"splits",
           {{"n_tr", c.splits.n_tr},
            {"n_cal", c.splits.n_cal},
            {"m_tr", c.splits.m_tr},
            {"m_cal", c.splits.m_cal},
            {"m_ts", c.splits.m_ts}}},
          {"synthetic",
           {{"d", c.synthetic.d},
            {"a", c.synthetic.a},
            {"b", c.synthetic.b},
            {"c", c.synthetic.c},
            {"noise_scale", c.synthetic.noise_scale}}},
          {"base",
           {{"kind", to_string(c.base.kind)},
            {"ridge_penalty", c.base.ridge_penalty},
            {"n_trees", c.base.n_trees},
            {"learning_rate", c.base.learning_rate},
            {"max_depth", c.base.max_depth},
            {"feature_map", to_string(c.base.feature_map)}}},
          {"ratio_classifier",
           {{"feature_map", to_string(c.ratio_classifier.feature_map)},
            {"l2_penalty", c.ratio_classifier.l2_penalty},
            {"probability_clamp", c.ratio_classifier.probability_clamp},
            {"max_iterations", c.ratio_classifier.max_iterations}}},
          {"csv_train_fraction", c.csv_train_fraction}};
}

namespace detail {

template <class T>
void take(const nlohmann::json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw std::invalid_argument("config: unknown key '" + where + it.key() + "'");
  }
}

}  // namespace detail

/// Overlays the keys present in `j` onto `c`. Unknown keys are errors.
inline void apply_config_json(ExperimentConfig& c, const nlohmann::json& j) {
  using detail::take;
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  detail::reject_unknown(j,
                         {"alpha", "split_alpha", "methods", "reps", "seed", "grid_points", "wtcp_test_points",
                          "shared_fit", "splits", "synthetic", "base", "ratio_classifier", "csv_train_fraction",
                          "output"},
                         "");
  take(j, "alpha", c.alpha);
  take(j, "split_alpha", c.split_alpha);
  take(j, "reps", c.reps);
  take(j, "seed", c.seed);
  take(j, "grid_points", c.grid_points);
  take(j, "wtcp_test_points", c.wtcp_test_points);
  take(j, "shared_fit", c.shared_fit);
  take(j, "csv_train_fraction", c.csv_train_fraction);
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
  }
  if (j.contains("splits")) {
    const auto& s = j.at("splits");
    detail::reject_unknown(s, {"n_tr", "n_cal", "m_tr", "m_cal", "m_ts"}, "splits.");
    take(s, "n_tr", c.splits.n_tr);
    take(s, "n_cal", c.splits.n_cal);
    take(s, "m_tr", c.splits.m_tr);
    take(s, "m_cal", c.splits.m_cal);
    take(s, "m_ts", c.splits.m_ts);
  }
  if (j.contains("synthetic")) {
    const auto& s = j.at("synthetic");
    detail::reject_unknown(s, {"d", "a", "b", "c", "noise_scale"}, "synthetic.");
    take(s, "d", c.synthetic.d);
    take(s, "a", c.synthetic.a);
    take(s, "b", c.synthetic.b);
    take(s, "c", c.synthetic.c);
    take(s, "noise_scale", c.synthetic.noise_scale);
  }
  if (j.contains("base")) {
    const auto& s = j.at("base");
    detail::reject_unknown(s, {"kind", "ridge_penalty", "n_trees", "learning_rate", "max_depth", "feature_map"},
                           "base.");
    if (s.contains("kind")) {
      const auto k = s.at("kind").get<std::string>();
      if (k == "ridge") c.base.kind = RegressorKind::ridge;
      else if (k == "boosted_stumps") c.base.kind = RegressorKind::boosted_stumps;
      else throw std::invalid_argument("config: unknown base.kind '" + k + "'");
    }
    take(s, "ridge_penalty", c.base.ridge_penalty);
    take(s, "n_trees", c.base.n_trees);
    take(s, "learning_rate", c.base.learning_rate);
    take(s, "max_depth", c.base.max_depth);
    if (s.contains("feature_map")) c.base.feature_map = feature_map_from_string(s.at("feature_map").get<std::string>());
  }
  if (j.contains("ratio_classifier")) {
    const auto& s = j.at("ratio_classifier");
    detail::reject_unknown(s, {"feature_map", "l2_penalty", "probability_clamp", "max_iterations"},
                           "ratio_classifier.");
    if (s.contains("feature_map"))
      c.ratio_classifier.feature_map = feature_map_from_string(s.at("feature_map").get<std::string>());
    take(s, "l2_penalty", c.ratio_classifier.l2_penalty);
    take(s, "probability_clamp", c.ratio_classifier.probability_clamp);
    take(s, "max_iterations", c.ratio_classifier.max_iterations);
  }
}

}  // namespace drcp
