#pragma once

// Additive-Gaussian testbed: linear-Gaussian outcomes over Gaussian features
// in both the observational and interventional populations, with the exact
// density ratio available in closed form.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>

#include "drcp/conformal.hpp"
#include "drcp/dataset.hpp"
#include "drcp/density_ratio.hpp"
#include "drcp/predictors.hpp"

namespace drcp {

struct GaussianConfig {
  int d = 1;
  Vector theta_O;
  Vector theta_I;
  double sigma = 1.0;
  Matrix Sigma_O;
  Matrix Sigma_I;
  // Feature means; zero when left empty.
  Vector mean_O;
  Vector mean_I;
  int n = 1000;
  int m = 50;
  int n_test = 20;
  std::uint64_t seed = 0;

  /// Identity covariances, zero means, the given coefficient vectors.
  static GaussianConfig isotropic(Vector theta_O, Vector theta_I, double sigma, int n, int m) {
    GaussianConfig c;
    c.d = static_cast<int>(theta_O.size());
    c.theta_O = std::move(theta_O);
    c.theta_I = std::move(theta_I);
    c.sigma = sigma;
    c.Sigma_O = Matrix::Identity(c.d, c.d);
    c.Sigma_I = Matrix::Identity(c.d, c.d);
    c.n = n;
    c.m = m;
    return c;
  }

  Vector feature_mean_O() const { return mean_O.size() ? mean_O : Vector::Zero(d); }
  Vector feature_mean_I() const { return mean_I.size() ? mean_I : Vector::Zero(d); }

  void validate() const {
    if (d <= 0) throw std::invalid_argument("GaussianConfig: d must be positive");
    if (theta_O.size() != d || theta_I.size() != d) throw std::invalid_argument("GaussianConfig: theta size");
    if (Sigma_O.rows() != d || Sigma_O.cols() != d || Sigma_I.rows() != d || Sigma_I.cols() != d)
      throw std::invalid_argument("GaussianConfig: covariance size");
    if ((mean_O.size() && mean_O.size() != d) || (mean_I.size() && mean_I.size() != d))
      throw std::invalid_argument("GaussianConfig: mean size");
    if (!(sigma > 0.0)) throw std::invalid_argument("GaussianConfig: sigma must be positive");
    if (n <= 0 || m <= 0 || n_test < 0) throw std::invalid_argument("GaussianConfig: sizes must be positive");
    for (const Matrix* s : {&Sigma_O, &Sigma_I}) {
      if (!s->isApprox(s->transpose(), 1e-12)) throw std::invalid_argument("GaussianConfig: covariance not symmetric");
      Eigen::LLT<Matrix> llt(*s);
      if (llt.info() != Eigen::Success) throw std::invalid_argument("GaussianConfig: covariance not positive definite");
    }
  }
};

struct GaussianSample {
  Dataset obs;
  Dataset intr;
  Dataset test;  // drawn from the interventional population
};

namespace detail {

inline Dataset draw_linear_gaussian(int rows, const Vector& mean, const Matrix& chol_lower, const Vector& theta,
                                    double sigma, Role role, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index d = mean.size();
  Dataset out;
  out.x.resize(rows, d);
  out.y.resize(rows);
  Vector z(d);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) z[k] = normal(rng);
    const Vector xi = mean + chol_lower * z;
    out.x.row(i) = xi.transpose();
    out.y[i] = theta.dot(xi) + sigma * normal(rng);
  }
  out.role.assign(static_cast<std::size_t>(rows), role);
  return out;
}

inline Matrix cholesky_lower(const Matrix& s) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("covariance not positive definite");
  return llt.matrixL();
}

}  // namespace detail

inline GaussianSample generate_gaussian(const GaussianConfig& cfg) {
  cfg.validate();
  const Matrix lo = detail::cholesky_lower(cfg.Sigma_O);
  const Matrix li = detail::cholesky_lower(cfg.Sigma_I);
  Rng obs_rng(derive_seed(cfg.seed, 11));
  Rng int_rng(derive_seed(cfg.seed, 12));
  Rng test_rng(derive_seed(cfg.seed, 13));
  GaussianSample s;
  s.obs = detail::draw_linear_gaussian(cfg.n, cfg.feature_mean_O(), lo, cfg.theta_O, cfg.sigma, Role::observational,
                                       obs_rng);
  s.intr = detail::draw_linear_gaussian(cfg.m, cfg.feature_mean_I(), li, cfg.theta_I, cfg.sigma,
                                        Role::interventional, int_rng);
  s.test = detail::draw_linear_gaussian(cfg.n_test, cfg.feature_mean_I(), li, cfg.theta_I, cfg.sigma, Role::test,
                                        test_rng);
  return s;
}

/// Exact p_I(x, y) / p_O(x, y) for a Gaussian configuration.
class GaussianOracle {
 public:
  explicit GaussianOracle(const GaussianConfig& cfg)
      : theta_O_(cfg.theta_O), theta_I_(cfg.theta_I), mean_O_(cfg.feature_mean_O()), mean_I_(cfg.feature_mean_I()),
        sigma_(cfg.sigma), llt_O_(cfg.Sigma_O), llt_I_(cfg.Sigma_I) {
    cfg.validate();
    log_det_O_ = 2.0 * Matrix(llt_O_.matrixL()).diagonal().array().log().sum();
    log_det_I_ = 2.0 * Matrix(llt_I_.matrixL()).diagonal().array().log().sum();
  }

  double log_ratio(std::span<const double> x, double y) const {
    const Eigen::Index d = theta_O_.size();
    if (static_cast<Eigen::Index>(x.size()) != d) throw std::invalid_argument("oracle_ratio: dimension mismatch");
    const Eigen::Map<const Vector> xv(x.data(), d);
    const Vector dI = xv - mean_I_;
    const Vector dO = xv - mean_O_;
    const double qI = dI.dot(llt_I_.solve(dI));
    const double qO = dO.dot(llt_O_.solve(dO));
    const double log_px = -0.5 * qI - 0.5 * log_det_I_ + 0.5 * qO + 0.5 * log_det_O_;
    const double rI = y - theta_I_.dot(xv);
    const double rO = y - theta_O_.dot(xv);
    const double log_py = (-rI * rI + rO * rO) / (2.0 * sigma_ * sigma_);
    return log_px + log_py;
  }

  double ratio(std::span<const double> x, double y) const { return std::exp(log_ratio(x, y)); }

 private:
  Vector theta_O_, theta_I_, mean_O_, mean_I_;
  double sigma_;
  Eigen::LLT<Matrix> llt_O_, llt_I_;
  double log_det_O_ = 0.0, log_det_I_ = 0.0;
};

inline double oracle_ratio(const GaussianConfig& cfg, std::span<const double> x, double y) {
  return GaussianOracle(cfg).ratio(x, y);
}

/// The oracle wrapped as a RatioModel (no clamping beyond the double range).
inline RatioModel oracle_ratio_model(const GaussianConfig& cfg) {
  auto oracle = std::make_shared<const GaussianOracle>(cfg);
  return RatioModel::from_function([oracle](std::span<const double> x, double y) { return oracle->ratio(x, y); },
                                   static_cast<std::size_t>(cfg.d), true);
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// E_{p_O} |r(x, y) - r_hat(x, y)| over n_mc fresh observational draws.
inline MonteCarloEstimate estimate_delta_r(const RatioModel& model, const GaussianConfig& cfg, int n_mc,
                                           std::uint64_t seed) {
  if (n_mc < 100) throw std::invalid_argument("estimate_delta_r: need n_mc >= 100");
  GaussianConfig draw = cfg;
  draw.n = n_mc;
  draw.m = 1;
  draw.n_test = 0;
  draw.seed = seed;
  const GaussianSample s = generate_gaussian(draw);
  const GaussianOracle oracle(cfg);
  double sum = 0.0, sum2 = 0.0;
  std::vector<double> buf;
  for (Eigen::Index i = 0; i < s.obs.x.rows(); ++i) {
    const auto x = row_span(s.obs.x, i, buf);
    const double e = std::abs(oracle.ratio(x, s.obs.y[i]) - model.ratio(x, s.obs.y[i]));
    sum += e;
    sum2 += e * e;
  }
  const double n = static_cast<double>(n_mc);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

/// (tI + tO)' Sigma_I (tI + tO) / (tI - tO)' Sigma_I (tI - tO)
inline double dissimilarity(const GaussianConfig& cfg) {
  const Vector sum = cfg.theta_I + cfg.theta_O;
  const Vector diff = cfg.theta_I - cfg.theta_O;
  const double den = diff.dot(cfg.Sigma_I * diff);
  if (!(den > 0.0)) throw std::invalid_argument("dissimilarity: theta_I equals theta_O");
  return sum.dot(cfg.Sigma_I * sum) / den;
}

enum class RatioSource { oracle, fitted };

struct WidthComparisonOptions {
  RatioSource ratio_source = RatioSource::oracle;
  int grid_points = 200;
  double naive_split_fraction = 0.5;
  ClassifierSpec classifier;
  RegressorSpec regressor = RegressorSpec::ridge(0.0);
};

struct WidthComparisonReport {
  int reps = 0;
  std::vector<double> wtcp_width;   // per-rep median width over test points
  std::vector<double> naive_width;  // per-rep median width over test points
  std::vector<double> n_eff;        // per rep
  double median_wtcp_width = 0.0;
  double median_naive_width = 0.0;
  double fraction_wtcp_not_wider = 0.0;
  double wtcp_coverage = 0.0;
  double naive_coverage = 0.0;
  double n_eff_min = 0.0;
  double n_eff_median = 0.0;
  double n_eff_max = 0.0;
  int degenerate = 0;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

}  // namespace detail

/// Runs weighted transductive CP on the observational sample and the naive
/// interventional-only split CP on matched test points, `reps` times.
inline WidthComparisonReport width_comparison(const GaussianConfig& cfg, double alpha, int reps,
                                              const WidthComparisonOptions& opt = {}) {
  if (reps < 1) throw std::invalid_argument("width_comparison: reps must be positive");
  if (cfg.n_test < 1) throw std::invalid_argument("width_comparison: need test points");
  WidthComparisonReport rep;
  rep.reps = reps;
  double wcov = 0.0, ncov = 0.0, total = 0.0;
  int not_wider = 0;
  std::vector<double> buf;
  for (int r = 0; r < reps; ++r) {
    GaussianConfig c = cfg;
    c.seed = derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(r));
    const GaussianSample s = generate_gaussian(c);
    const RatioModel ratio = opt.ratio_source == RatioSource::oracle
                                 ? oracle_ratio_model(cfg)
                                 : fit_density_ratio(s.obs, s.intr, opt.classifier);
    const std::vector<double> obs_ratios = ratio.ratios(s.obs);
    rep.n_eff.push_back(effective_sample_size(obs_ratios));

    const Dataset pooled = concat(s.obs, s.intr);
    const YGrid grid = YGrid::around(std::span<const double>(pooled.y.data(), pooled.size()), opt.grid_points);
    const auto [ntrain, ncal] = split_by_fraction(s.intr, opt.naive_split_fraction);
    const SplitConformal naive(ntrain, ncal, alpha, opt.regressor);

    std::vector<double> ww, nw;
    for (Eigen::Index i = 0; i < s.test.x.rows(); ++i) {
      const auto x = row_span(s.test.x, i, buf);
      const double y = s.test.y[i];
      const TransductiveResult w = wtcp_dr_interval(s.obs, ratio, x, alpha, grid, opt.regressor);
      const Interval n = naive.interval(x);
      if (w.degenerate()) {
        ++rep.degenerate;
        ww.push_back(0.0);
      } else {
        ww.push_back(w.hull->width());
        wcov += w.hull->contains(y);
      }
      nw.push_back(n.width());
      ncov += n.contains(y);
      total += 1.0;
    }
    const double wm = detail::median(ww), nm = detail::median(nw);
    rep.wtcp_width.push_back(wm);
    rep.naive_width.push_back(nm);
    not_wider += wm <= nm;
  }
  rep.median_wtcp_width = detail::median(rep.wtcp_width);
  rep.median_naive_width = detail::median(rep.naive_width);
  rep.fraction_wtcp_not_wider = static_cast<double>(not_wider) / reps;
  rep.wtcp_coverage = wcov / total;
  rep.naive_coverage = ncov / total;
  rep.n_eff_min = *std::min_element(rep.n_eff.begin(), rep.n_eff.end());
  rep.n_eff_max = *std::max_element(rep.n_eff.begin(), rep.n_eff.end());
  rep.n_eff_median = detail::median(rep.n_eff);
  return rep;
}

/// Fits OLS (no intercept) on n rows of N(0, I_d) features `reps` times and
/// compares the variance of one fresh test residual per fit with
/// (1 + d / (n - d - 1)) sigma^2. Returns the ratio.
inline double ols_residual_variance_check(int n, int d, double sigma, int reps, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("ols check: d must be positive");
  if (n <= d + 1) throw std::invalid_argument("ols check: need n > d + 1");
  if (reps < 2) throw std::invalid_argument("ols check: need at least two repetitions");
  if (!(sigma > 0.0)) throw std::invalid_argument("ols check: sigma must be positive");
  RegressorSpec spec = RegressorSpec::ridge(0.0);
  spec.fit_intercept = false;
  const Vector beta = Vector::Ones(d);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> residuals;
  residuals.reserve(static_cast<std::size_t>(reps));
  Matrix x(n, d);
  Vector y(n);
  std::vector<double> xt(static_cast<std::size_t>(d));
  for (int r = 0; r < reps; ++r) {
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < d; ++k) x(i, k) = normal(rng);
      y[i] = x.row(i).dot(beta) + sigma * normal(rng);
    }
    const Regressor model = fit_regressor(spec, x, y);
    double yt = 0.0;
    for (int k = 0; k < d; ++k) {
      xt[static_cast<std::size_t>(k)] = normal(rng);
      yt += xt[static_cast<std::size_t>(k)] * beta[k];
    }
    yt += sigma * normal(rng);
    residuals.push_back(yt - model.predict(xt));
  }
  double mean = 0.0;
  for (double v : residuals) mean += v;
  mean /= reps;
  double var = 0.0;
  for (double v : residuals) var += (v - mean) * (v - mean);
  var /= (reps - 1);
  const double expected = (1.0 + static_cast<double>(d) / (n - d - 1)) * sigma * sigma;
  return var / expected;
}

}  // namespace drcp
