#pragma once

// Base learners: ridge regression, gradient-boosted regression trees, and a
// logistic classifier trained by gradient descent. Fitted models are
// immutable values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "drcp/dataset.hpp"

namespace drcp {

enum class FeatureMap { identity, polynomial_degree2 };

inline std::size_t mapped_dim(std::size_t d, FeatureMap map) {
  return map == FeatureMap::identity ? d : d + d * (d + 1) / 2;
}

/// Writes phi(x) (without intercept) into `out`.
inline void map_features(std::span<const double> x, FeatureMap map, std::span<double> out) {
  const std::size_t d = x.size();
  std::copy(x.begin(), x.end(), out.begin());
  if (map == FeatureMap::identity) return;
  std::size_t k = d;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) out[k++] = x[i] * x[j];
}

inline Matrix map_features(const Matrix& x, FeatureMap map) {
  if (map == FeatureMap::identity) return x;
  const auto d = static_cast<std::size_t>(x.cols());
  Matrix out(x.rows(), static_cast<Eigen::Index>(mapped_dim(d, map)));
  Eigen::Index k = x.cols();
  out.leftCols(x.cols()) = x;
  for (Eigen::Index i = 0; i < x.cols(); ++i)
    for (Eigen::Index j = i; j < x.cols(); ++j) out.col(k++) = x.col(i).cwiseProduct(x.col(j));
  return out;
}

// ---------------------------------------------------------------------------
// Regression

enum class RegressorKind { ridge, boosted_stumps };

struct RegressorSpec {
  RegressorKind kind = RegressorKind::boosted_stumps;
  double ridge_penalty = 0.0;
  int n_trees = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  FeatureMap feature_map = FeatureMap::identity;
  bool fit_intercept = true;
  int min_samples_leaf = 1;
  int max_bins = 255;

  static RegressorSpec ridge(double penalty = 0.0, FeatureMap map = FeatureMap::identity) {
    RegressorSpec s;
    s.kind = RegressorKind::ridge;
    s.ridge_penalty = penalty;
    s.feature_map = map;
    return s;
  }
  static RegressorSpec boosted(int n_trees = 100, double learning_rate = 0.1, int max_depth = 3) {
    RegressorSpec s;
    s.kind = RegressorKind::boosted_stumps;
    s.n_trees = n_trees;
    s.learning_rate = learning_rate;
    s.max_depth = max_depth;
    return s;
  }

  void validate() const {
    if (!(ridge_penalty >= 0.0)) throw std::invalid_argument("RegressorSpec: ridge_penalty must be >= 0");
    if (n_trees <= 0) throw std::invalid_argument("RegressorSpec: n_trees must be positive");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
      throw std::invalid_argument("RegressorSpec: learning_rate must lie in (0, 1]");
    if (max_depth <= 0) throw std::invalid_argument("RegressorSpec: max_depth must be positive");
    if (min_samples_leaf <= 0) throw std::invalid_argument("RegressorSpec: min_samples_leaf must be positive");
    if (max_bins < 2 || max_bins > 65535) throw std::invalid_argument("RegressorSpec: max_bins out of range");
  }
};

inline std::string to_string(RegressorKind k) { return k == RegressorKind::ridge ? "ridge" : "boosted_stumps"; }

/// Linear model on mapped features: y = intercept + beta . phi(x).
class LinearModel {
 public:
  LinearModel() = default;
  LinearModel(Vector beta, double intercept, FeatureMap map, std::size_t input_dim)
      : beta_(std::move(beta)), intercept_(intercept), map_(map), input_dim_(input_dim) {}

  double predict(std::span<const double> x) const {
    if (map_ == FeatureMap::identity) {
      double s = intercept_;
      for (std::size_t j = 0; j < x.size(); ++j) s += beta_[static_cast<Eigen::Index>(j)] * x[j];
      return s;
    }
    std::vector<double> phi(static_cast<std::size_t>(beta_.size()));
    map_features(x, map_, phi);
    double s = intercept_;
    for (std::size_t j = 0; j < phi.size(); ++j) s += beta_[static_cast<Eigen::Index>(j)] * phi[j];
    return s;
  }

  const Vector& coefficients() const { return beta_; }
  double intercept() const { return intercept_; }
  FeatureMap feature_map() const { return map_; }
  std::size_t input_dim() const { return input_dim_; }

  Vector predict(const Matrix& x) const {
    return (map_features(x, map_) * beta_).array() + intercept_;
  }

 private:
  Vector beta_;
  double intercept_ = 0.0;
  FeatureMap map_ = FeatureMap::identity;
  std::size_t input_dim_ = 0;
};

/// Penalized normal equations (G + lambda P) beta = b, kept around so one
/// extra observation can be folded in without revisiting the base data.
/// The intercept column (last, when present) is not penalized.
class RidgeNormalEquations {
 public:
  RidgeNormalEquations(const Matrix& x, const Vector& y, const RegressorSpec& spec)
      : spec_(spec), input_dim_(static_cast<std::size_t>(x.cols())) {
    Matrix phi = design(map_features(x, spec.feature_map));
    gram_ = phi.transpose() * phi;
    moment_ = phi.transpose() * y;
  }

  std::size_t parameter_count() const { return static_cast<std::size_t>(gram_.rows()); }

  LinearModel solve() const { return solve_system(gram_, moment_); }

  /// Solution with one extra row (x_new, y_new) appended to the data.
  LinearModel solve_with(std::span<const double> x_new, double y_new) const {
    const Vector phi = design_row(x_new);
    Matrix g = gram_;
    g.noalias() += phi * phi.transpose();
    Vector b = moment_ + phi * y_new;
    return solve_system(g, b);
  }

 private:
  Matrix design(const Matrix& phi) const {
    if (!spec_.fit_intercept) return phi;
    Matrix out(phi.rows(), phi.cols() + 1);
    out.leftCols(phi.cols()) = phi;
    out.col(phi.cols()).setOnes();
    return out;
  }

  Vector design_row(std::span<const double> x) const {
    if (x.size() != input_dim_) throw std::invalid_argument("ridge: dimension mismatch");
    const std::size_t p = mapped_dim(input_dim_, spec_.feature_map);
    Vector out(static_cast<Eigen::Index>(p + (spec_.fit_intercept ? 1 : 0)));
    map_features(x, spec_.feature_map, std::span<double>(out.data(), p));
    if (spec_.fit_intercept) out[static_cast<Eigen::Index>(p)] = 1.0;
    return out;
  }

  LinearModel solve_system(Matrix g, const Vector& b) const {
    const Eigen::Index p = g.rows();
    const Eigen::Index penalized = spec_.fit_intercept ? p - 1 : p;
    for (Eigen::Index j = 0; j < penalized; ++j) g(j, j) += spec_.ridge_penalty;
    Vector beta;
    Eigen::LDLT<Matrix> ldlt(g);
    bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (ok) {
      const auto d = ldlt.vectorD();
      const double dmax = d.cwiseAbs().maxCoeff();
      ok = dmax > 0.0 && d.minCoeff() > dmax * 1e-13;
    }
    if (!ok) throw std::runtime_error("ridge: singular normal equations");
    beta = ldlt.solve(b);
    if (!beta.allFinite()) throw std::runtime_error("ridge: non-finite solution");
    const Eigen::Index k = static_cast<Eigen::Index>(mapped_dim(input_dim_, spec_.feature_map));
    const double intercept = spec_.fit_intercept ? beta[k] : 0.0;
    return LinearModel(beta.head(k), intercept, spec_.feature_map, input_dim_);
  }

  RegressorSpec spec_;
  std::size_t input_dim_;
  Matrix gram_;
  Vector moment_;
};

/// Flat binary regression tree; a node with feature < 0 is a leaf.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

class BoostedTrees {
 public:
  BoostedTrees() = default;
  BoostedTrees(double base, std::vector<std::vector<TreeNode>> trees, std::size_t input_dim,
               std::vector<double> training_loss)
      : base_(base), trees_(std::move(trees)), input_dim_(input_dim), training_loss_(std::move(training_loss)) {}

  double predict(std::span<const double> x) const {
    double s = base_;
    for (const auto& tree : trees_) {
      int node = 0;
      while (tree[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& n = tree[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
      }
      s += tree[static_cast<std::size_t>(node)].value;
    }
    return s;
  }

  std::size_t input_dim() const { return input_dim_; }
  std::size_t tree_count() const { return trees_.size(); }
  /// Mean squared training error after the base value and after each tree.
  const std::vector<double>& training_loss() const { return training_loss_; }

 private:
  double base_ = 0.0;
  std::vector<std::vector<TreeNode>> trees_;
  std::size_t input_dim_ = 0;
  std::vector<double> training_loss_;
};

namespace detail {

// Per-feature histogram binning: bin b holds values in (edge[b-1], edge[b]];
// the last bin is unbounded above.
struct BinnedFeatures {
  std::vector<std::vector<double>> edges;      // per feature, size bins-1
  std::vector<std::vector<std::uint16_t>> bin;  // per feature, per row
};

inline BinnedFeatures bin_features(const Matrix& x, int max_bins) {
  BinnedFeatures out;
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  out.edges.resize(d);
  out.bin.resize(d);
  std::vector<double> sorted(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) sorted[i] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> uniq;
    uniq.reserve(n);
    for (double v : sorted)
      if (uniq.empty() || v != uniq.back()) uniq.push_back(v);
    auto& edges = out.edges[j];
    if (uniq.size() <= static_cast<std::size_t>(max_bins)) {
      for (std::size_t k = 0; k + 1 < uniq.size(); ++k) edges.push_back(0.5 * (uniq[k] + uniq[k + 1]));
    } else {
      // quantile cut points, placed between neighbouring distinct values
      for (int b = 1; b < max_bins; ++b) {
        const auto pos = static_cast<std::size_t>(static_cast<double>(b) * static_cast<double>(n) / max_bins);
        const double v = sorted[std::min(pos, n - 1)];
        auto it = std::upper_bound(uniq.begin(), uniq.end(), v);
        if (it == uniq.end()) break;
        const double edge = 0.5 * (*(it - 1) + *it);
        if (edges.empty() || edge > edges.back()) edges.push_back(edge);
      }
    }
    auto& col = out.bin[j];
    col.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      col[i] = static_cast<std::uint16_t>(std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
    }
  }
  return out;
}

struct SplitChoice {
  int feature = -1;
  int bin = -1;  // rows with bin <= this go left
  double gain = 0.0;
};

inline std::vector<TreeNode> grow_tree(const BinnedFeatures& bins, const std::vector<double>& residual,
                                       const RegressorSpec& spec, std::vector<double>& update) {
  const std::size_t n = residual.size();
  const std::size_t d = bins.edges.size();
  std::vector<TreeNode> nodes;
  struct Pending {
    int node;
    std::vector<std::size_t> rows;
    int depth;
  };
  std::vector<Pending> stack;
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  nodes.push_back({});
  stack.push_back({0, std::move(all), 0});
  std::vector<double> hsum;
  std::vector<double> hcnt;

  while (!stack.empty()) {
    Pending cur = std::move(stack.back());
    stack.pop_back();
    double total = 0.0;
    for (std::size_t i : cur.rows) total += residual[i];
    const auto count = static_cast<double>(cur.rows.size());
    const double mean = count > 0 ? total / count : 0.0;

    SplitChoice best;
    if (cur.depth < spec.max_depth && cur.rows.size() >= 2 * static_cast<std::size_t>(spec.min_samples_leaf)) {
      const double parent = total * total / count;
      for (std::size_t j = 0; j < d; ++j) {
        const std::size_t nb = bins.edges[j].size() + 1;
        if (nb < 2) continue;
        hsum.assign(nb, 0.0);
        hcnt.assign(nb, 0.0);
        const auto& col = bins.bin[j];
        for (std::size_t i : cur.rows) {
          hsum[col[i]] += residual[i];
          hcnt[col[i]] += 1.0;
        }
        double ls = 0.0, lc = 0.0;
        for (std::size_t b = 0; b + 1 < nb; ++b) {
          ls += hsum[b];
          lc += hcnt[b];
          const double rc = count - lc;
          if (lc < spec.min_samples_leaf || rc < spec.min_samples_leaf) continue;
          const double rs = total - ls;
          const double gain = ls * ls / lc + rs * rs / rc - parent;
          if (gain > best.gain + 1e-12 * std::abs(parent)) best = {static_cast<int>(j), static_cast<int>(b), gain};
        }
      }
    }

    if (best.feature < 0) {
      const double v = spec.learning_rate * mean;
      nodes[static_cast<std::size_t>(cur.node)].value = v;
      for (std::size_t i : cur.rows) update[i] = v;
      continue;
    }
    const auto f = static_cast<std::size_t>(best.feature);
    std::vector<std::size_t> left, right;
    for (std::size_t i : cur.rows) (bins.bin[f][i] <= best.bin ? left : right).push_back(i);
    const int li = static_cast<int>(nodes.size());
    nodes.push_back({});
    const int ri = static_cast<int>(nodes.size());
    nodes.push_back({});
    auto& node = nodes[static_cast<std::size_t>(cur.node)];
    node.feature = best.feature;
    node.threshold = bins.edges[f][static_cast<std::size_t>(best.bin)];
    node.left = li;
    node.right = ri;
    stack.push_back({ri, std::move(right), cur.depth + 1});
    stack.push_back({li, std::move(left), cur.depth + 1});
  }
  return nodes;
}

}  // namespace detail

/// Stagewise squared-loss boosting of depth-limited regression trees on
/// histogram-binned features.
inline BoostedTrees fit_boosted_trees(const Matrix& x, const Vector& y, const RegressorSpec& spec) {
  const auto n = static_cast<std::size_t>(x.rows());
  const detail::BinnedFeatures bins = detail::bin_features(x, spec.max_bins);
  const double base = y.mean();
  std::vector<double> fitted(n, base);
  std::vector<double> residual(n);
  std::vector<double> update(n);
  std::vector<std::vector<TreeNode>> trees;
  trees.reserve(static_cast<std::size_t>(spec.n_trees));
  std::vector<double> loss;
  loss.reserve(static_cast<std::size_t>(spec.n_trees) + 1);
  auto mse = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[static_cast<Eigen::Index>(i)] - fitted[i];
      s += r * r;
    }
    return s / static_cast<double>(n);
  };
  loss.push_back(mse());
  for (int t = 0; t < spec.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[static_cast<Eigen::Index>(i)] - fitted[i];
    trees.push_back(detail::grow_tree(bins, residual, spec, update));
    for (std::size_t i = 0; i < n; ++i) fitted[i] += update[i];
    loss.push_back(mse());
  }
  return BoostedTrees(base, std::move(trees), static_cast<std::size_t>(x.cols()), std::move(loss));
}

/// A fitted regression model mu(x).
class Regressor {
 public:
  explicit Regressor(LinearModel m) : model_(std::move(m)) {}
  explicit Regressor(BoostedTrees m) : model_(std::move(m)) {}

  std::size_t input_dim() const {
    return std::visit([](const auto& m) { return m.input_dim(); }, model_);
  }

  double predict(std::span<const double> x) const {
    if (x.size() != input_dim()) throw std::invalid_argument("predict: dimension mismatch");
    return std::visit([&](const auto& m) { return m.predict(x); }, model_);
  }

  Vector predict(const Matrix& x) const {
    if (static_cast<std::size_t>(x.cols()) != input_dim()) throw std::invalid_argument("predict: dimension mismatch");
    if (const auto* lin = linear()) return lin->predict(x);
    Vector out(x.rows());
    std::vector<double> buf;
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = predict(row_span(x, i, buf));
    return out;
  }

  const LinearModel* linear() const { return std::get_if<LinearModel>(&model_); }
  const BoostedTrees* boosted() const { return std::get_if<BoostedTrees>(&model_); }

 private:
  std::variant<LinearModel, BoostedTrees> model_;
};

inline Regressor fit_regressor(const RegressorSpec& spec, const Matrix& x, const Vector& y) {
  spec.validate();
  if (x.rows() < 1) throw std::invalid_argument("fit_regressor: need at least one row");
  if (x.rows() != y.size()) throw std::invalid_argument("fit_regressor: dimension mismatch");
  if (x.cols() < 1) throw std::invalid_argument("fit_regressor: need at least one feature");
  if (!x.allFinite() || !y.allFinite()) throw std::invalid_argument("fit_regressor: non-finite input");
  if (spec.kind == RegressorKind::ridge) return Regressor(RidgeNormalEquations(x, y, spec).solve());
  return Regressor(fit_boosted_trees(x, y, spec));
}

inline Regressor fit_regressor(const RegressorSpec& spec, const Dataset& data) {
  return fit_regressor(spec, data.x, data.y);
}

/// Fits repeatedly on a fixed base dataset plus one varying extra row.
/// Ridge reuses the base normal equations; other kinds refit from scratch.
class AugmentedFitter {
 public:
  AugmentedFitter(const RegressorSpec& spec, const Dataset& base) : spec_(spec), base_(base) {
    spec_.validate();
    if (base.empty()) throw std::invalid_argument("AugmentedFitter: empty base data");
    if (!base.x.allFinite() || !base.y.allFinite()) throw std::invalid_argument("AugmentedFitter: non-finite input");
    if (spec.kind == RegressorKind::ridge) normal_ = std::make_unique<RidgeNormalEquations>(base.x, base.y, spec);
  }

  Regressor fit_with(std::span<const double> x_new, double y_new) const {
    if (normal_) return Regressor(normal_->solve_with(x_new, y_new));
    const Dataset aug = base_.with_row(x_new, y_new);
    return fit_regressor(spec_, aug.x, aug.y);
  }

 private:
  RegressorSpec spec_;
  const Dataset& base_;
  std::unique_ptr<RidgeNormalEquations> normal_;
};

// ---------------------------------------------------------------------------
// Classification

enum class ClassifierKind { logistic };

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::logistic;
  FeatureMap feature_map = FeatureMap::polynomial_degree2;
  int max_iterations = 1000;
  double step_size = 1.0;
  double l2_penalty = 1e-4;
  double probability_clamp = 0.01;
  // Reweights classes to equal total mass. Only changes the constant prior
  // factor of the implied density ratio.
  bool balance_classes = true;
  double gradient_tolerance = 1e-7;

  void validate() const {
    if (max_iterations <= 0) throw std::invalid_argument("ClassifierSpec: max_iterations must be positive");
    if (!(step_size > 0.0)) throw std::invalid_argument("ClassifierSpec: step_size must be positive");
    if (!(l2_penalty >= 0.0)) throw std::invalid_argument("ClassifierSpec: l2_penalty must be >= 0");
    if (!(probability_clamp > 0.0 && probability_clamp < 0.5))
      throw std::invalid_argument("ClassifierSpec: probability_clamp must lie in (0, 0.5)");
  }
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Logistic model on standardized mapped features. predict_proba returns the
/// class-1 probability clamped to [clamp, 1 - clamp].
class Classifier {
 public:
  Classifier(ClassifierSpec spec, std::size_t input_dim, Vector coefficients, double intercept, Vector center,
             Vector scale, std::vector<double> loss_trace = {})
      : spec_(spec),
        input_dim_(input_dim),
        coef_(std::move(coefficients)),
        intercept_(intercept),
        center_(std::move(center)),
        scale_(std::move(scale)),
        loss_trace_(std::move(loss_trace)) {
    spec_.validate();
    const auto p = static_cast<Eigen::Index>(mapped_dim(input_dim_, spec_.feature_map));
    if (coef_.size() != p || center_.size() != p || scale_.size() != p)
      throw std::invalid_argument("Classifier: coefficient size mismatch");
  }

  /// Unstandardized model: logit = intercept + coefficients . phi(x).
  static Classifier from_coefficients(ClassifierSpec spec, std::size_t input_dim, Vector coefficients,
                                      double intercept) {
    const auto p = coefficients.size();
    return Classifier(spec, input_dim, std::move(coefficients), intercept, Vector::Zero(p), Vector::Ones(p));
  }

  double logit(std::span<const double> x) const {
    if (x.size() != input_dim_) throw std::invalid_argument("predict_proba: dimension mismatch");
    const std::size_t p = static_cast<std::size_t>(coef_.size());
    double phi_stack[64];
    std::vector<double> phi_heap;
    std::span<double> phi;
    if (p <= 64) {
      phi = std::span<double>(phi_stack, p);
    } else {
      phi_heap.resize(p);
      phi = phi_heap;
    }
    map_features(x, spec_.feature_map, phi);
    double z = intercept_;
    for (std::size_t j = 0; j < p; ++j) {
      const auto k = static_cast<Eigen::Index>(j);
      z += coef_[k] * (phi[j] - center_[k]) / scale_[k];
    }
    return z;
  }

  double raw_proba(std::span<const double> x) const { return sigmoid(logit(x)); }

  double predict_proba(std::span<const double> x) const {
    const double c = spec_.probability_clamp;
    return std::clamp(raw_proba(x), c, 1.0 - c);
  }

  std::size_t input_dim() const { return input_dim_; }
  const ClassifierSpec& spec() const { return spec_; }
  /// Training objective after each gradient iteration (entry 0: initial).
  const std::vector<double>& loss_trace() const { return loss_trace_; }

 private:
  ClassifierSpec spec_;
  std::size_t input_dim_;
  Vector coef_;
  double intercept_;
  Vector center_;
  Vector scale_;
  std::vector<double> loss_trace_;
};

/// Logistic regression by gradient descent with Armijo backtracking on the
/// (class-weighted) mean log-loss plus (l2/2)|w|^2.
inline Classifier fit_classifier(const ClassifierSpec& spec, const Matrix& x, std::span<const int> z) {
  spec.validate();
  const auto n = static_cast<std::size_t>(x.rows());
  if (n != z.size()) throw std::invalid_argument("fit_classifier: dimension mismatch");
  if (x.cols() < 1) throw std::invalid_argument("fit_classifier: need at least one feature");
  if (!x.allFinite()) throw std::invalid_argument("fit_classifier: non-finite input");
  std::size_t n1 = 0;
  for (int v : z) {
    if (v != 0 && v != 1) throw std::invalid_argument("fit_classifier: labels must be 0 or 1");
    n1 += static_cast<std::size_t>(v);
  }
  if (n1 == 0 || n1 == n) throw std::invalid_argument("fit_classifier: both classes must be present");

  Matrix phi = map_features(x, spec.feature_map);
  const Eigen::Index p = phi.cols();
  Vector center = phi.colwise().mean().transpose();
  Vector scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double sd = std::sqrt((phi.col(j).array() - center[j]).square().mean());
    scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  for (Eigen::Index j = 0; j < p; ++j) phi.col(j) = (phi.col(j).array() - center[j]) / scale[j];

  Vector label(static_cast<Eigen::Index>(n));
  Vector weight(static_cast<Eigen::Index>(n));
  const double w1 = spec.balance_classes ? static_cast<double>(n) / (2.0 * static_cast<double>(n1)) : 1.0;
  const double w0 = spec.balance_classes ? static_cast<double>(n) / (2.0 * static_cast<double>(n - n1)) : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    label[static_cast<Eigen::Index>(i)] = z[i];
    weight[static_cast<Eigen::Index>(i)] = z[i] == 1 ? w1 : w0;
  }
  const double wsum = weight.sum();

  // parameters: [coefficients (p), intercept]
  Vector theta = Vector::Zero(p + 1);
  auto objective = [&](const Vector& th, Vector* grad) {
    const Vector eta = (phi * th.head(p)).array() + th[p];
    double loss = 0.0;
    Vector r(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double e = eta[i];
      // log(1 + exp(e)) - y e, computed stably
      const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
      loss += weight[i] * (softplus - label[i] * e);
      r[i] = weight[i] * (sigmoid(e) - label[i]);
    }
    loss /= wsum;
    loss += 0.5 * spec.l2_penalty * th.head(p).squaredNorm();
    if (grad) {
      grad->resize(p + 1);
      grad->head(p) = phi.transpose() * r / wsum + spec.l2_penalty * th.head(p);
      (*grad)[p] = r.sum() / wsum;
    }
    return loss;
  };

  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(spec.max_iterations) + 1);
  Vector grad;
  double loss = objective(theta, &grad);
  trace.push_back(loss);
  double step = spec.step_size;
  for (int it = 0; it < spec.max_iterations; ++it) {
    const double gnorm2 = grad.squaredNorm();
    if (std::sqrt(gnorm2) < spec.gradient_tolerance) break;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Vector candidate = theta - step * grad;
      Vector cand_grad;
      const double cand_loss = objective(candidate, &cand_grad);
      if (cand_loss <= loss - 0.5 * step * gnorm2) {
        theta = candidate;
        loss = cand_loss;
        grad = std::move(cand_grad);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    trace.push_back(loss);
    step *= 1.5;
  }
  const auto dim = static_cast<std::size_t>(x.cols());
  return Classifier(spec, dim, theta.head(p), theta[p], std::move(center), std::move(scale), std::move(trace));
}

}  // namespace drcp
