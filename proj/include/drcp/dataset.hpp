#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace drcp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// Where a row came from: observational study, randomized (interventional)
/// study, or held-out test set.
enum class Role { observational, interventional, test };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::observational: return "obs";
    case Role::interventional: return "int";
    case Role::test: return "test";
  }
  return "?";
}

inline Role role_from_string(std::string_view s) {
  if (s == "obs") return Role::observational;
  if (s == "int") return Role::interventional;
  if (s == "test") return Role::test;
  throw std::invalid_argument("unknown role '" + std::string(s) + "'");
}

/// Rows of (features, outcome) with optional treatment flags and role tags.
/// `t` and `role` are either empty or have one entry per row.
struct Dataset {
  Matrix x;
  Vector y;
  std::vector<int> t;
  std::vector<Role> role;

  Dataset() = default;
  Dataset(Matrix features, Vector outcomes) : x(std::move(features)), y(std::move(outcomes)) {
    validate();
  }

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(x.cols()); }
  bool empty() const { return size() == 0; }
  bool has_treatment() const { return !t.empty(); }

  std::vector<double> row(std::size_t i) const {
    std::vector<double> out(dim());
    for (std::size_t j = 0; j < dim(); ++j) out[j] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
  }

  void validate() const {
    if (x.rows() != y.size()) throw std::invalid_argument("dataset: feature rows and outcome count differ");
    if (!t.empty() && t.size() != size()) throw std::invalid_argument("dataset: treatment count differs from rows");
    if (!role.empty() && role.size() != size()) throw std::invalid_argument("dataset: role count differs from rows");
  }

  Dataset subset(std::span<const std::size_t> idx) const {
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
    out.y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] >= size()) throw std::out_of_range("dataset: subset index out of range");
      const auto i = static_cast<Eigen::Index>(idx[k]);
      out.x.row(static_cast<Eigen::Index>(k)) = x.row(i);
      out.y(static_cast<Eigen::Index>(k)) = y(i);
      if (!t.empty()) out.t.push_back(t[idx[k]]);
      if (!role.empty()) out.role.push_back(role[idx[k]]);
    }
    return out;
  }

  /// Contiguous rows [begin, end).
  Dataset slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) throw std::out_of_range("dataset: bad slice");
    std::vector<std::size_t> idx(end - begin);
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = begin + k;
    return subset(idx);
  }

  Dataset where_treatment(int arm) const {
    if (t.empty()) throw std::invalid_argument("dataset: no treatment column");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < size(); ++i)
      if (t[i] == arm) idx.push_back(i);
    return subset(idx);
  }

  Dataset where_role(Role r) const {
    if (role.empty()) throw std::invalid_argument("dataset: no role column");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < size(); ++i)
      if (role[i] == r) idx.push_back(i);
    return subset(idx);
  }

  /// Appends one row; `t` and `role` stay empty unless already populated.
  Dataset with_row(std::span<const double> xr, double yr) const {
    if (xr.size() != dim() && !empty()) throw std::invalid_argument("dataset: appended row has wrong dimension");
    Dataset out;
    const Eigen::Index n = x.rows();
    const auto d = static_cast<Eigen::Index>(xr.size());
    out.x.resize(n + 1, d);
    if (n > 0) out.x.topRows(n) = x;
    for (Eigen::Index j = 0; j < d; ++j) out.x(n, j) = xr[static_cast<std::size_t>(j)];
    out.y.resize(n + 1);
    if (n > 0) out.y.head(n) = y;
    out.y(n) = yr;
    return out;
  }
};

/// Row-wise concatenation. Treatment/role columns are kept only when both
/// sides carry them.
inline Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.dim() != b.dim()) throw std::invalid_argument("concat: dimension mismatch");
  Dataset out;
  out.x.resize(a.x.rows() + b.x.rows(), a.x.cols());
  out.x << a.x, b.x;
  out.y.resize(a.y.size() + b.y.size());
  out.y << a.y, b.y;
  if (a.has_treatment() && b.has_treatment()) {
    out.t = a.t;
    out.t.insert(out.t.end(), b.t.begin(), b.t.end());
  }
  if (!a.role.empty() && !b.role.empty()) {
    out.role = a.role;
    out.role.insert(out.role.end(), b.role.begin(), b.role.end());
  }
  return out;
}

inline std::span<const double> row_span(const Matrix& m, Eigen::Index i, std::vector<double>& buffer) {
  buffer.resize(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) buffer[static_cast<std::size_t>(j)] = m(i, j);
  return buffer;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Deterministic per-stream seed derived from a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace drcp
