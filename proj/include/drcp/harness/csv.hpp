#pragma once

// Dataset CSV: header x0..x{d-1},t,y[,role]. `t` and `role` are optional,
// values use '.' decimals, infinities are written inf / -inf.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "drcp/dataset.hpp"

namespace drcp {

class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "csv line " + std::to_string(line) + ": " + what : "csv: " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, std::size_t line, std::string_view column) {
  if (s.empty()) throw CsvError(line, "missing value in column " + std::string(column));
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw CsvError(line, "malformed number '" + std::string(s) + "' in column " + std::string(column));
  if (std::isnan(v)) throw CsvError(line, "NaN in column " + std::string(column));
  return v;
}

}  // namespace detail

inline Dataset read_csv_dataset(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw CsvError(0, "missing header row");
  const auto header = detail::split_fields(line);

  std::map<int, std::size_t> xcols;
  int t_col = -1, y_col = -1, role_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string_view h = header[c];
    int* slot = nullptr;
    if (h == "t") slot = &t_col;
    else if (h == "y") slot = &y_col;
    else if (h == "role") slot = &role_col;
    if (slot) {
      if (*slot >= 0) throw CsvError(lineno, "duplicate column " + std::string(h));
      *slot = static_cast<int>(c);
      continue;
    }
    int k = -1;
    if (h.size() > 1 && h[0] == 'x') {
      const auto res = std::from_chars(h.data() + 1, h.data() + h.size(), k);
      if (res.ec != std::errc() || res.ptr != h.data() + h.size() || k < 0) k = -1;
    }
    if (k < 0) throw CsvError(lineno, "unknown column '" + std::string(h) + "'");
    if (!xcols.emplace(k, c).second) throw CsvError(lineno, "duplicate column " + std::string(h));
  }
  if (y_col < 0) throw CsvError(lineno, "missing required column 'y'");
  if (xcols.empty()) throw CsvError(lineno, "no feature columns (x0, x1, ...)");
  const int d = static_cast<int>(xcols.size());
  if (xcols.rbegin()->first != d - 1) throw CsvError(lineno, "feature columns must be x0..x" + std::to_string(d - 1));

  std::vector<double> xs, ys;
  std::vector<int> ts;
  std::vector<Role> roles;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_fields(line);
    if (f.size() != header.size())
      throw CsvError(lineno, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    for (const auto& [k, c] : xcols) xs.push_back(detail::parse_double(f[c], lineno, header[c]));
    ys.push_back(detail::parse_double(f[static_cast<std::size_t>(y_col)], lineno, "y"));
    if (t_col >= 0) {
      const std::string_view tv = f[static_cast<std::size_t>(t_col)];
      if (tv != "0" && tv != "1") throw CsvError(lineno, "treatment must be 0 or 1, got '" + std::string(tv) + "'");
      ts.push_back(tv == "1");
    }
    if (role_col >= 0) {
      try {
        roles.push_back(role_from_string(f[static_cast<std::size_t>(role_col)]));
      } catch (const std::exception&) {
        throw CsvError(lineno, "unknown role '" + std::string(f[static_cast<std::size_t>(role_col)]) + "'");
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(ys.size());
  Dataset out;
  out.x = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(xs.data(), n, d);
  out.y = Eigen::Map<const Vector>(ys.data(), n);
  out.t = std::move(ts);
  out.role = std::move(roles);
  return out;
}

inline Dataset load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError(0, "cannot open " + path);
  return read_csv_dataset(in);
}

inline void write_csv_dataset(std::ostream& out, const Dataset& data) {
  data.validate();
  const auto d = data.dim();
  for (std::size_t k = 0; k < d; ++k) out << 'x' << k << ',';
  if (data.has_treatment()) out << "t,";
  out << 'y';
  if (!data.role.empty()) out << ",role";
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < d; ++k) out << format_double(data.x(r, static_cast<Eigen::Index>(k))) << ',';
    if (data.has_treatment()) out << data.t[i] << ',';
    out << format_double(data.y[r]);
    if (!data.role.empty()) out << ',' << to_string(data.role[i]);
    out << '\n';
  }
}

inline void save_csv_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw CsvError(0, "cannot write " + path);
  write_csv_dataset(out, data);
}

}  // namespace drcp
