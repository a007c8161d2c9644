#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "spice/common.hpp"

namespace spice::csv {

/// Streaming reader for comma-separated numeric rows. A first row containing
/// any non-numeric field is taken as a header. Blank lines are skipped. Every
/// data row must have the same number of fields as the first one.
class Reader {
 public:
  /// `label` names the source in error messages.
  Reader(std::istream& in, std::string label);

  /// Reads the next data row into `row`. Returns false at end of input.
  /// Throws DataError naming the line on malformed input.
  bool next(std::vector<double>& row);

  const std::optional<std::vector<std::string>>& header() const { return header_; }
  /// Field count fixed by the header or first data row; 0 before any row.
  std::size_t width() const { return width_; }
  std::int64_t line() const { return line_; }

 private:
  bool parse(const std::string& text, std::vector<double>& row) const;

  std::istream& in_;
  std::string label_;
  std::string buffer_;
  std::optional<std::vector<std::string>> header_;
  std::size_t width_ = 0;
  std::int64_t line_ = 0;
  bool started_ = false;
};

/// Shortest round-trip decimal form ("inf", "-inf", "nan" for non-finite).
std::string format_double(double value);

void write_row(std::ostream& out, std::span<const double> values);
void write_header(std::ostream& out, const std::vector<std::string>& names);

/// Whole-file convenience: rows as X (n x (width - 1)) and the last column as y.
struct Table {
  Matrix X;
  Vector y;
};
Table read_xy(const std::string& path);

}  // namespace spice::csv
