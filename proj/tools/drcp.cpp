// drcp: command-line harness.
//
//   drcp synth    [flags]                      synthetic confounded benchmark
//   drcp run      --data file.csv [flags]      user data (x*, t, y, role columns)
//   drcp sweep    --param d|m --values 1,3,5   repeat `synth` over a grid
//   drcp gaussian [flags]                      Gaussian testbed + OLS check
//
// Settings resolve as CLI flag > --config JSON file > built-in default.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drcp/drcp.hpp"

namespace {

using namespace drcp;

struct CommonFlags {
  std::string config_path;
  double alpha = 0.1;
  std::vector<std::string> methods;
  int n_obs = 0;
  int m_int = 0;
  int dim = 1;
  int reps = 10;
  std::uint64_t seed = 0;
  int grid_points = 200;
  std::string out;
  std::string format = "csv";
  bool shared_fit = false;
  int wtcp_test_points = 20;
};

struct Options {
  CLI::Option* alpha = nullptr;
  CLI::Option* methods = nullptr;
  CLI::Option* n_obs = nullptr;
  CLI::Option* m_int = nullptr;
  CLI::Option* dim = nullptr;
  CLI::Option* reps = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* grid_points = nullptr;
  CLI::Option* shared_fit = nullptr;
  CLI::Option* wtcp_test_points = nullptr;
};

Options add_common(CLI::App* app, CommonFlags& f) {
  Options o;
  app->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  o.alpha = app->add_option("--alpha", f.alpha, "miscoverage level");
  o.methods = app->add_option("--methods", f.methods, "comma-separated method names")->delimiter(',');
  o.n_obs = app->add_option("--n-obs", f.n_obs, "observational size, split evenly into train/calibration");
  o.m_int = app->add_option("--m-int", f.m_int, "interventional size per arm, split evenly");
  o.dim = app->add_option("--dim", f.dim, "feature dimension");
  o.reps = app->add_option("--reps", f.reps, "repetitions");
  o.seed = app->add_option("--seed", f.seed, "master seed");
  o.grid_points = app->add_option("--grid-points", f.grid_points, "outcome grid size for transductive methods");
  o.shared_fit = app->add_flag("--shared-fit", f.shared_fit, "fit the first-stage base model once");
  o.wtcp_test_points =
      app->add_option("--wtcp-test-points", f.wtcp_test_points, "test points scored by wtcp_dr per repetition");
  app->add_option("--out", f.out, "output path (default stdout)");
  app->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  return o;
}

ExperimentConfig resolve(const CommonFlags& f, const Options& o) {
  ExperimentConfig c;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    apply_config_json(c, nlohmann::json::parse(in));
  }
  if (o.alpha->count()) c.alpha = f.alpha;
  if (o.methods->count()) {
    c.methods.clear();
    for (const auto& m : f.methods) c.methods.push_back(method_from_string(m));
  }
  if (o.n_obs->count()) {
    c.splits.n_tr = f.n_obs / 2;
    c.splits.n_cal = f.n_obs - f.n_obs / 2;
  }
  if (o.m_int->count()) {
    c.splits.m_tr = f.m_int / 2;
    c.splits.m_cal = f.m_int - f.m_int / 2;
  }
  if (o.dim->count()) c.synthetic.d = f.dim;
  if (o.reps->count()) c.reps = f.reps;
  if (o.seed->count()) c.seed = f.seed;
  if (o.grid_points->count()) c.grid_points = f.grid_points;
  if (o.shared_fit->count()) c.shared_fit = f.shared_fit;
  if (o.wtcp_test_points->count()) c.wtcp_test_points = f.wtcp_test_points;
  return c;
}

class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot write " + path);
    }
  }
  std::ostream& stream() { return path_.empty() ? std::cout : file_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream file_;
};

// CSV: per-repetition rows to --out, summary JSON next to it (or to stderr
// when writing to stdout). JSON: one document with config, summary, records.
void emit(const CommonFlags& f, const ExperimentConfig& cfg, const ExperimentReport& report) {
  Output out(f.out);
  if (f.format == "csv") {
    write_records_csv(out.stream(), report);
    const nlohmann::json summary = {{"config", config_json(cfg)}, {"summary", summary_json(report)}};
    if (out.path().empty()) {
      std::cerr << summary.dump(2) << '\n';
    } else {
      std::ofstream js(out.path() + ".summary.json");
      js << summary.dump(2) << '\n';
    }
    return;
  }
  std::ostringstream records;
  write_records_csv(records, report);
  out.stream() << nlohmann::json{{"config", config_json(cfg)},
                                 {"summary", summary_json(report)},
                                 {"records_csv", records.str()}}
                      .dump(2)
               << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal intervals for counterfactual outcomes and treatment effects"};
  app.require_subcommand(1);

  CommonFlags synth_f;
  CLI::App* synth = app.add_subcommand("synth", "synthetic confounded benchmark");
  const Options synth_o = add_common(synth, synth_f);
  std::string export_path;
  synth->add_option("--export-data", export_path, "write repetition 0's data as CSV and exit");

  CommonFlags run_f;
  CLI::App* run = app.add_subcommand("run", "experiment on a CSV dataset");
  const Options run_o = add_common(run, run_f);
  std::string data_path;
  run->add_option("--data", data_path, "CSV with x0..x{d-1},t,y,role")->required()->check(CLI::ExistingFile);

  CommonFlags sweep_f;
  CLI::App* sweep = app.add_subcommand("sweep", "synthetic benchmark over a parameter grid");
  const Options sweep_o = add_common(sweep, sweep_f);
  std::string param;
  std::vector<int> values;
  sweep->add_option("--param", param, "d or m")->required()->check(CLI::IsMember({"d", "m"}));
  sweep->add_option("--values", values, "parameter values")->required()->delimiter(',');

  CLI::App* gauss = app.add_subcommand("gaussian", "Gaussian testbed width comparison and OLS variance check");
  int g_dim = 10, g_n = 2000, g_m = 50, g_reps = 50, g_test = 20, g_grid = 200, ols_reps = 2000;
  double g_alpha = 0.1, g_gap = 0.1, g_shift = 0.0;
  std::uint64_t g_seed = 0;
  std::string g_out;
  bool g_fitted = false;
  gauss->add_option("--dim", g_dim);
  gauss->add_option("--n-obs", g_n);
  gauss->add_option("--m-int", g_m);
  gauss->add_option("--reps", g_reps);
  gauss->add_option("--seed", g_seed);
  gauss->add_option("--alpha", g_alpha);
  gauss->add_option("--grid-points", g_grid);
  gauss->add_option("--test-points", g_test, "test points per repetition");
  gauss->add_option("--theta-gap", g_gap, "theta_I = theta_O + gap * e_1, theta_O = 1");
  gauss->add_option("--mean-shift", g_shift, "interventional feature mean shift on every coordinate");
  gauss->add_flag("--fitted-ratio", g_fitted, "classifier ratio instead of the exact one");
  gauss->add_option("--ols-reps", ols_reps, "repetitions for the OLS variance check (0 skips)");
  gauss->add_option("--out", g_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const ExperimentConfig cfg = resolve(synth_f, synth_o);
      cfg.validate();
      if (!export_path.empty()) {
        SyntheticConfig sc = cfg.synthetic;
        sc.n_obs = cfg.splits.n_tr + cfg.splits.n_cal;
        sc.m_int = cfg.splits.m_tr + cfg.splits.m_cal;
        sc.n_test = cfg.splits.m_ts;
        sc.seed = derive_seed(cfg.seed, 0);
        const CausalSampleSet s = generate_synthetic(sc);
        Dataset all = concat(concat(s.observational, s.interventional[0]), s.interventional[1]);
        all = concat(concat(all, test_rows(s.test, 0)), test_rows(s.test, 1));
        save_csv_dataset(export_path, all);
        return 0;
      }
      emit(synth_f, cfg, run_experiment(cfg));
    } else if (*run) {
      ExperimentConfig cfg = resolve(run_f, run_o);
      cfg.csv_data = load_csv_dataset(data_path);
      emit(run_f, cfg, run_experiment(cfg));
    } else if (*sweep) {
      const ExperimentConfig cfg = resolve(sweep_f, sweep_o);
      const auto points = run_sweep(cfg, param == "d" ? SweepParam::d : SweepParam::m, values);
      Output out(sweep_f.out);
      if (sweep_f.format == "csv") {
        for (std::size_t i = 0; i < points.size(); ++i)
          write_records_csv(out.stream(), points[i].report, param + ",", std::to_string(values[i]) + ",", i == 0);
      } else {
        nlohmann::json doc = {{"config", config_json(cfg)}, {"param", param}, {"points", nlohmann::json::array()}};
        for (std::size_t i = 0; i < points.size(); ++i)
          doc["points"].push_back({{"value", values[i]}, {"summary", summary_json(points[i].report)}});
        out.stream() << doc.dump(2) << '\n';
      }
    } else if (*gauss) {
      GaussianConfig g = GaussianConfig::isotropic(Vector::Ones(g_dim), Vector::Ones(g_dim), 1.0, g_n, g_m);
      g.theta_I[0] += g_gap;
      g.mean_I = Vector::Constant(g_dim, g_shift);
      g.n_test = g_test;
      g.seed = g_seed;
      WidthComparisonOptions opt;
      opt.grid_points = g_grid;
      opt.ratio_source = g_fitted ? RatioSource::fitted : RatioSource::oracle;
      const WidthComparisonReport r = width_comparison(g, g_alpha, g_reps, opt);
      nlohmann::json doc = {{"dissimilarity", dissimilarity(g)},
                            {"reps", r.reps},
                            {"median_wtcp_width", r.median_wtcp_width},
                            {"median_naive_width", r.median_naive_width},
                            {"fraction_wtcp_not_wider", r.fraction_wtcp_not_wider},
                            {"wtcp_coverage", r.wtcp_coverage},
                            {"naive_coverage", r.naive_coverage},
                            {"n_eff", {{"min", r.n_eff_min}, {"median", r.n_eff_median}, {"max", r.n_eff_max}}},
                            {"degenerate", r.degenerate}};
      if (ols_reps > 0) doc["ols_variance_ratio"] = ols_residual_variance_check(500, 10, 1.0, ols_reps, g_seed);
      Output out(g_out);
      out.stream() << doc.dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "drcp: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
