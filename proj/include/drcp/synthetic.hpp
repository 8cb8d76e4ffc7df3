#pragma once

// Synthetic benchmark with hidden confounding.
//
//   U, Z ~ N(0, I_d),  eps_0, eps_1 ~ N(0, 1)
//   X    = Z * (a^2 (1 - U) + b^2 U) + U        (coordinate-wise)
//   rho  = c mean(U) + (1 - c)(1 - mean(U)),    T ~ Bernoulli(clamp(rho, 0, 1))
//   Y(1) = sigmoid(3 (mean(U) + 2)) + s eps_1
//   Y(0) = sigmoid(3 (mean(U) - 2)) + s eps_0
//
// Observational rows keep the selected treatment. Interventional rows redraw
// the whole unit with T forced, so their X follows the marginal p(x).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>

#include "drcp/dataset.hpp"
#include "drcp/predictors.hpp"

namespace drcp {

struct SyntheticConfig {
  int d = 1;
  int n_obs = 10000;
  int m_int = 250;  // per arm
  int n_test = 200;
  double a = 5.0;
  double b = 3.0;
  double c = 0.9;
  double noise_scale = 0.1;
  // Generate interventional rows for this arm only; both arms when unset.
  std::optional<int> target_treatment;
  std::uint64_t seed = 0;

  void validate() const {
    if (d <= 0) throw std::invalid_argument("SyntheticConfig: d must be positive");
    if (n_obs <= 0 || m_int <= 0 || n_test <= 0) throw std::invalid_argument("SyntheticConfig: sizes must be positive");
    if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("SyntheticConfig: c must lie in [0, 1]");
    if (!(noise_scale >= 0.0)) throw std::invalid_argument("SyntheticConfig: noise_scale must be >= 0");
    if (target_treatment && *target_treatment != 0 && *target_treatment != 1)
      throw std::invalid_argument("SyntheticConfig: target_treatment must be 0 or 1");
  }
};

struct TestSet {
  Matrix x;
  Vector y0;
  Vector y1;
  Vector ite;

  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
  const Vector& outcome(int arm) const { return arm == 1 ? y1 : y0; }
};

struct CausalSampleSet {
  Dataset observational;                  // x, t, y; role obs
  std::array<Dataset, 2> interventional;  // x, y(t); role int
  TestSet test;
  Matrix observational_u;                 // latent U per observational row
  Vector observational_u_bar;
};

namespace detail {

struct Unit {
  std::vector<double> u, x;
  double u_bar = 0.0, y0 = 0.0, y1 = 0.0;
};

inline void draw_unit(const SyntheticConfig& cfg, Rng& rng, Unit& unit) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = static_cast<std::size_t>(cfg.d);
  unit.u.resize(d);
  unit.x.resize(d);
  double sum = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    unit.u[k] = normal(rng);
    sum += unit.u[k];
  }
  const double a2 = cfg.a * cfg.a, b2 = cfg.b * cfg.b;
  for (std::size_t k = 0; k < d; ++k) {
    const double z = normal(rng);
    const double u = unit.u[k];
    unit.x[k] = z * (a2 * (1.0 - u) + b2 * u) + u;
  }
  unit.u_bar = sum / static_cast<double>(d);
  const double e1 = normal(rng);
  const double e0 = normal(rng);
  unit.y1 = sigmoid(3.0 * (unit.u_bar + 2.0)) + cfg.noise_scale * e1;
  unit.y0 = sigmoid(3.0 * (unit.u_bar - 2.0)) + cfg.noise_scale * e0;
}

inline double treatment_probability(const SyntheticConfig& cfg, double u_bar) {
  return std::clamp(cfg.c * u_bar + (1.0 - cfg.c) * (1.0 - u_bar), 0.0, 1.0);
}

}  // namespace detail

inline CausalSampleSet generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const auto d = static_cast<Eigen::Index>(cfg.d);
  CausalSampleSet out;
  detail::Unit unit;

  {
    Rng rng(derive_seed(cfg.seed, 1));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    auto& obs = out.observational;
    obs.x.resize(cfg.n_obs, d);
    obs.y.resize(cfg.n_obs);
    obs.t.resize(static_cast<std::size_t>(cfg.n_obs));
    obs.role.assign(static_cast<std::size_t>(cfg.n_obs), Role::observational);
    out.observational_u.resize(cfg.n_obs, d);
    out.observational_u_bar.resize(cfg.n_obs);
    for (Eigen::Index i = 0; i < cfg.n_obs; ++i) {
      detail::draw_unit(cfg, rng, unit);
      const int t = uniform(rng) < detail::treatment_probability(cfg, unit.u_bar) ? 1 : 0;
      for (Eigen::Index k = 0; k < d; ++k) {
        obs.x(i, k) = unit.x[static_cast<std::size_t>(k)];
        out.observational_u(i, k) = unit.u[static_cast<std::size_t>(k)];
      }
      obs.t[static_cast<std::size_t>(i)] = t;
      obs.y[i] = t == 1 ? unit.y1 : unit.y0;
      out.observational_u_bar[i] = unit.u_bar;
    }
  }

  for (int arm = 0; arm < 2; ++arm) {
    if (cfg.target_treatment && *cfg.target_treatment != arm) continue;
    Rng rng(derive_seed(cfg.seed, 2 + static_cast<std::uint64_t>(arm)));
    auto& intr = out.interventional[static_cast<std::size_t>(arm)];
    intr.x.resize(cfg.m_int, d);
    intr.y.resize(cfg.m_int);
    intr.t.assign(static_cast<std::size_t>(cfg.m_int), arm);
    intr.role.assign(static_cast<std::size_t>(cfg.m_int), Role::interventional);
    for (Eigen::Index i = 0; i < cfg.m_int; ++i) {
      detail::draw_unit(cfg, rng, unit);
      for (Eigen::Index k = 0; k < d; ++k) intr.x(i, k) = unit.x[static_cast<std::size_t>(k)];
      intr.y[i] = arm == 1 ? unit.y1 : unit.y0;
    }
  }

  {
    Rng rng(derive_seed(cfg.seed, 4));
    auto& test = out.test;
    test.x.resize(cfg.n_test, d);
    test.y0.resize(cfg.n_test);
    test.y1.resize(cfg.n_test);
    for (Eigen::Index i = 0; i < cfg.n_test; ++i) {
      detail::draw_unit(cfg, rng, unit);
      for (Eigen::Index k = 0; k < d; ++k) test.x(i, k) = unit.x[static_cast<std::size_t>(k)];
      test.y0[i] = unit.y0;
      test.y1[i] = unit.y1;
    }
    test.ite = test.y1 - test.y0;
  }
  return out;
}

/// Test rows as a Dataset for one arm: role test, t = arm, y = Y(arm).
inline Dataset test_rows(const TestSet& test, int arm) {
  Dataset out(test.x, test.outcome(arm));
  out.t.assign(test.size(), arm);
  out.role.assign(test.size(), Role::test);
  return out;
}

}  // namespace drcp
