#include "spice/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace spice::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_number(std::string_view field, double& value) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  if (field.empty()) return false;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  return ec == std::errc() && ptr == field.data() + field.size();
}

}  // namespace

Reader::Reader(std::istream& in, std::string label) : in_(in), label_(std::move(label)) {}

bool Reader::parse(const std::string& text, std::vector<double>& row) const {
  const auto fields = split_fields(text);
  row.resize(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (!parse_number(fields[i], row[i])) return false;
  return true;
}

bool Reader::next(std::vector<double>& row) {
  while (std::getline(in_, buffer_)) {
    ++line_;
    if (trim(buffer_).empty()) continue;
    const bool numeric = parse(buffer_, row);
    if (!started_) {
      started_ = true;
      if (!numeric) {
        std::vector<std::string> names;
        for (auto f : split_fields(buffer_)) names.emplace_back(f);
        width_ = names.size();
        header_ = std::move(names);
        continue;
      }
      width_ = row.size();
    }
    if (!numeric)
      throw DataError(label_ + ": line " + std::to_string(line_) + ": non-numeric field");
    if (row.size() != width_)
      throw DataError(label_ + ": line " + std::to_string(line_) + ": expected " +
                      std::to_string(width_) + " fields, found " + std::to_string(row.size()));
    for (double v : row)
      if (!std::isfinite(v))
        throw DataError(label_ + ": line " + std::to_string(line_) + ": non-finite value");
    return true;
  }
  if (in_.bad()) throw DataError(label_ + ": read error");
  return false;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_row(std::ostream& out, std::span<const double> values) {
  char buf[64];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out.put(',');
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, values[i]);
    out.write(buf, ptr - buf);
  }
  out.put('\n');
}

void write_header(std::ostream& out, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out.put(',');
    out << names[i];
  }
  out.put('\n');
}

Table read_xy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  Reader reader(in, path);
  std::vector<double> row, flat;
  std::size_t rows = 0;
  while (reader.next(row)) {
    flat.insert(flat.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw DataError(path + ": no rows");
  const std::size_t width = reader.width();
  if (width < 2) throw DataError(path + ": need at least one feature column and a target");
  Table t;
  t.X.resize(static_cast<Index>(rows), static_cast<Index>(width - 1));
  t.y.resize(static_cast<Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j + 1 < width; ++j)
      t.X(static_cast<Index>(i), static_cast<Index>(j)) = flat[i * width + j];
    t.y[static_cast<Index>(i)] = flat[i * width + width - 1];
  }
  return t;
}

}  // namespace spice::csv
