#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "drcp/harness/csv.hpp"
#include "drcp/harness/experiment.hpp"
#include "drcp/harness/metrics.hpp"
#include "drcp/harness/report.hpp"

using namespace drcp;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.splits = {300, 300, 30, 30, 40};
  c.reps = 2;
  c.seed = 5;
  c.base = RegressorSpec::boosted(20);
  c.methods = {Method::naive, Method::wcp, Method::wscp_dr_inexact, Method::wscp_dr_exact,
               Method::wscp_dr_star_exact};
  return c;
}

std::string csv_error(const std::string& text) {
  std::istringstream in(text);
  try {
    read_csv_dataset(in);
  } catch (const CsvError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Coverage, Examples) {
  const std::vector<Interval> all(3, Interval::unbounded());
  const std::vector<double> truths = {0.0, 5.0, 10.0};
  EXPECT_EQ(coverage(all, truths), 1.0);

  const std::vector<Interval> points = {{0.0, 0.0}, {5.0, 5.0}, {10.0, 10.0}};
  EXPECT_EQ(coverage(points, truths), 1.0);
  const std::vector<double> shifted = {1e-9, 5.0 + 1e-9, 10.0 + 1e-9};
  EXPECT_EQ(coverage(points, shifted), 0.0);

  const std::vector<Interval> mixed = {{-1.0, 1.0}, {6.0, 7.0}, {9.0, 11.0}};
  EXPECT_DOUBLE_EQ(coverage(mixed, truths), 2.0 / 3.0);
  EXPECT_THROW(coverage(mixed, std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(coverage(std::vector<Interval>{}, std::vector<double>{}), std::invalid_argument);
}

TEST(MeanWidth, Examples) {
  const std::vector<Interval> a = {{0, 1}, {0, 2}, {0, 3}};
  EXPECT_EQ(mean_width(a).mean, 2.0);
  EXPECT_FALSE(mean_width(a).has_infinite());

  const std::vector<Interval> b = {{0, 1}, Interval::unbounded(), {0, 3}};
  const auto w = mean_width(b);
  EXPECT_TRUE(std::isinf(w.mean));
  EXPECT_EQ(w.finite_mean, 2.0);
  EXPECT_EQ(w.infinite, 1u);

  const std::vector<Interval> z = {{1, 1}, {2, 2}};
  EXPECT_EQ(mean_width(z).mean, 0.0);
  EXPECT_THROW(mean_width(std::vector<Interval>{}), std::invalid_argument);
}

TEST(Csv, ReadsSmallFile) {
  std::istringstream in("x0,x1,t,y\n1,2,0,3.5\n-1,0.5,1,2\n4,5,1,-inf\n");
  const Dataset d = read_csv_dataset(in);
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.dim(), 2u);
  EXPECT_EQ(d.t, (std::vector<int>{0, 1, 1}));
  EXPECT_EQ(d.x(1, 1), 0.5);
  EXPECT_TRUE(std::isinf(d.y[2]) && d.y[2] < 0);
  EXPECT_TRUE(d.role.empty());
}

TEST(Csv, SchemaErrors) {
  EXPECT_NE(csv_error("x0,t\n1,0\n").find("'y'"), std::string::npos);
  EXPECT_NE(csv_error("x0,z,y\n1,2,3\n").find("unknown column 'z'"), std::string::npos);
  EXPECT_NE(csv_error("x0,y\n1,2\n3,nan\n").find("line 3"), std::string::npos);
  EXPECT_NE(csv_error("x0,y\n1,2\n3,\n").find("missing value"), std::string::npos);
  EXPECT_NE(csv_error("x0,y\n1,2\n3\n").find("line 3"), std::string::npos);
  EXPECT_NE(csv_error("x0,y\n1,abc\n").find("malformed"), std::string::npos);
  EXPECT_NE(csv_error("x0,t,y\n1,2,3\n").find("treatment"), std::string::npos);
  EXPECT_NE(csv_error("x0,y,role\n1,2,train\n").find("unknown role"), std::string::npos);
  EXPECT_NE(csv_error("x1,y\n1,2\n").find("x0"), std::string::npos);
  EXPECT_NE(csv_error("").find("header"), std::string::npos);
}

TEST(Csv, InfinityAndPrecisionRoundTrip) {
  Matrix x(3, 1);
  x << 0.1, 1.0 / 3.0, -2.5e-300;
  Vector y(3);
  y << kInf, -kInf, 123456789.123456789;
  Dataset d(x, y);
  d.role = {Role::observational, Role::interventional, Role::test};
  d.t = {0, 1, 0};
  std::stringstream buf;
  write_csv_dataset(buf, d);
  EXPECT_NE(buf.str().find(",inf,"), std::string::npos);
  EXPECT_NE(buf.str().find(",-inf,"), std::string::npos);
  const Dataset back = read_csv_dataset(buf);
  EXPECT_TRUE(back.x == d.x);
  EXPECT_TRUE(back.y == d.y);
  EXPECT_EQ(back.role, d.role);
}

TEST(Experiment, DeterministicUnderSeed) {
  const ExperimentConfig c = small_config();
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].coverage, b.records[i].coverage);
    EXPECT_EQ(a.records[i].width, b.records[i].width);
  }
  std::ostringstream sa, sb;
  write_records_csv(sa, a);
  write_records_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Experiment, ReportInvariants) {
  const auto report = run_experiment(small_config());
  // 5 methods x 3 targets x 2 reps
  EXPECT_EQ(report.records.size(), 30u);
  for (const auto& s : report.summary) {
    EXPECT_GE(s.coverage_mean, 0.0);
    EXPECT_LE(s.coverage_mean, 1.0);
    EXPECT_GE(s.coverage_std, 0.0);
    EXPECT_EQ(s.reps, 2);
  }
  for (Method m : {Method::naive, Method::wcp, Method::wscp_dr_exact}) {
    for (int rep = 0; rep < 2; ++rep) {
      double c0 = 0, c1 = 0, ci = 0;
      for (const auto& r : report.records) {
        if (r.method != m || r.rep != rep) continue;
        (r.target == Target::y0 ? c0 : r.target == Target::y1 ? c1 : ci) = r.coverage;
      }
      EXPECT_GE(ci + 1e-12, std::max(0.0, c0 + c1 - 1.0));
    }
  }
}

TEST(Experiment, SplitsAreDisjoint) {
  const ExperimentConfig c = small_config();
  const RepData rd = detail::synthetic_rep(c, 1);
  EXPECT_EQ(rd.obs_tr.size(), 300u);
  EXPECT_EQ(rd.obs_cal.size(), 300u);
  std::set<double> seen;
  for (Eigen::Index i = 0; i < rd.obs_tr.x.rows(); ++i) seen.insert(rd.obs_tr.y[i]);
  for (Eigen::Index i = 0; i < rd.obs_cal.x.rows(); ++i) EXPECT_EQ(seen.count(rd.obs_cal.y[i]), 0u);
  for (int arm = 0; arm < 2; ++arm) {
    EXPECT_EQ(rd.intr[arm].size(), 60u);
    EXPECT_EQ(rd.m_tr[arm], 30u);
    EXPECT_EQ(rd.test[arm].size(), 40u);
  }
}

TEST(Experiment, InfeasibleSplitsFailEarly) {
  ExperimentConfig c = small_config();
  c.splits.m_tr = 1;
  EXPECT_THROW(run_experiment(c), std::invalid_argument);
  c = small_config();
  c.alpha = 1.5;
  EXPECT_THROW(run_experiment(c), std::invalid_argument);
  c = small_config();
  c.methods.clear();
  EXPECT_THROW(run_experiment(c), std::invalid_argument);
  EXPECT_THROW(run_sweep(small_config(), SweepParam::m, {60, 2}), std::invalid_argument);
}

TEST(Experiment, TransductiveMethodRuns) {
  ExperimentConfig c = small_config();
  c.methods = {Method::wtcp_dr};
  c.base = RegressorSpec::ridge();
  c.reps = 1;
  c.wtcp_test_points = 5;
  c.grid_points = 50;
  const auto report = run_experiment(c);
  EXPECT_EQ(report.at(Method::wtcp_dr, Target::y0).reps, 1);
  for (const auto& r : report.records) EXPECT_EQ(r.n_points, 5u);
}

TEST(Experiment, CsvSourceRuns) {
  SyntheticConfig sc;
  sc.n_obs = 600;
  sc.m_int = 40;
  sc.n_test = 30;
  sc.seed = 3;
  const auto s = generate_synthetic(sc);
  const Dataset all = concat(concat(concat(s.observational, s.interventional[0]), s.interventional[1]),
                             concat(test_rows(s.test, 0), test_rows(s.test, 1)));
  std::stringstream buf;
  write_csv_dataset(buf, all);
  ExperimentConfig c = small_config();
  c.csv_data = read_csv_dataset(buf);
  const auto report = run_experiment(c);
  EXPECT_FALSE(report.has(Method::naive, Target::ite));
  EXPECT_TRUE(report.has(Method::naive, Target::y1));
}

TEST(Config, JsonOverlayAndUnknownKeys) {
  ExperimentConfig c;
  apply_config_json(c, nlohmann::json::parse(R"({"alpha": 0.2, "methods": ["naive", "wtcp_dr"],
      "splits": {"m_tr": 10}, "base": {"kind": "ridge"}})"));
  EXPECT_EQ(c.alpha, 0.2);
  EXPECT_EQ(c.methods, (std::vector<Method>{Method::naive, Method::wtcp_dr}));
  EXPECT_EQ(c.splits.m_tr, 10);
  EXPECT_EQ(c.splits.n_tr, 5000);
  EXPECT_EQ(c.base.kind, RegressorKind::ridge);
  EXPECT_THROW(apply_config_json(c, nlohmann::json::parse(R"({"alpah": 0.1})")), std::invalid_argument);
  EXPECT_THROW(apply_config_json(c, nlohmann::json::parse(R"({"methods": ["magic"]})")), std::invalid_argument);
}

TEST(Report, FixedColumns) {
  ExperimentReport r;
  r.records.push_back({Method::wscp_dr_exact, Target::ite, 3, 10, 0.9, kInf, 1.5, 1, 0});
  std::ostringstream out;
  write_records_csv(out, r);
  EXPECT_EQ(out.str(),
            "method,target,rep,n_points,coverage,width,finite_width,n_infinite,n_empty\n"
            "wscp_dr_exact,ite,3,10,0.9,inf,1.5,1,0\n");
  r.summary = summarize(r.records);
  const auto js = summary_json(r);
  EXPECT_EQ(js[0]["width_mean"], "inf");
}
