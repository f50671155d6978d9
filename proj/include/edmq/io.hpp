#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "edmq/distribution.hpp"
#include "edmq/divergence.hpp"
#include "edmq/error.hpp"
#include "edmq/experiments.hpp"

namespace edmq {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view field, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty())
    throw Error(ErrorKind::malformed_file, "line " + std::to_string(line) + ": '" + std::string(field) +
                                               "' is not a decimal number");
  return v;
}

inline std::string format_double(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

}  // namespace detail

/// Samples CSV: one point per row, exactly `dimension` comma-separated
/// numbers. Blank lines and lines starting with '#' are skipped.
inline Samples read_samples_csv(std::istream& in, std::size_t dimension) {
  Samples out(dimension);
  std::vector<double> point(dimension);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = detail::trim(line);
    if (row.empty() || row.front() == '#') continue;
    std::size_t k = 0, start = 0;
    for (;;) {
      const std::size_t comma = row.find(',', start);
      const auto field = row.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      if (k == dimension)
        throw Error(ErrorKind::malformed_file, "line " + std::to_string(line_no) + ": more than " +
                                                   std::to_string(dimension) + " columns");
      point[k++] = detail::parse_double(field, line_no);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (k != dimension)
      throw Error(ErrorKind::malformed_file, "line " + std::to_string(line_no) + ": expected " +
                                                 std::to_string(dimension) + " columns, got " + std::to_string(k));
    out.push_back(point);
  }
  if (in.bad()) throw Error(ErrorKind::malformed_file, "read error");
  return out;
}

inline Samples read_samples_csv(const std::string& path, std::size_t dimension) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::malformed_file, "cannot open '" + path + "'");
  return read_samples_csv(in, dimension);
}

inline void write_samples_csv(std::ostream& out, const Samples& samples) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto p = samples[i];
    for (std::size_t k = 0; k < p.size(); ++k) out << (k ? "," : "") << detail::format_double(p[k]);
    out << '\n';
  }
}

/// Labels file: one non-negative integer per line, cell order; '#' lines skipped.
inline Labeling read_labels(std::istream& in) {
  Labeling out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = detail::trim(line);
    if (row.empty() || row.front() == '#') continue;
    Label v = 0;
    const auto [ptr, ec] = std::from_chars(row.data(), row.data() + row.size(), v);
    if (ec != std::errc{} || ptr != row.data() + row.size())
      throw Error(ErrorKind::malformed_file, "line " + std::to_string(line_no) + ": bad label '" +
                                                 std::string(row) + "'");
    out.push_back(v);
  }
  return out;
}

inline void write_labels(std::ostream& out, const Labeling& labels) {
  for (Label l : labels) out << l << '\n';
}

inline constexpr std::string_view rate_csv_header = "n,trial,iterations,D_hat,D_best,loss";

inline void write_rate_csv(std::ostream& out, const std::vector<RateRow>& rows) {
  out << rate_csv_header << '\n';
  for (const auto& r : rows) {
    out << r.n << ',' << r.trial << ',' << r.iterations << ',' << detail::format_double(r.d_hat) << ','
        << detail::format_double(r.d_best) << ',' << detail::format_double(r.loss) << '\n';
  }
}

inline std::vector<std::uint8_t> read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::malformed_file, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace edmq
