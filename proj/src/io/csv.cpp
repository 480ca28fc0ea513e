#include "abpinn/io/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "abpinn/error.hpp"

namespace abpinn::io {

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

double parse_double(std::string_view field, std::string_view context) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw IoError(std::string(context) + ": '" + std::string(field) + "' is not a number");
  }
  if (!std::isfinite(v)) throw IoError(std::string(context) + ": non-finite value");
  return v;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::span<const std::string> header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), width_(header.size()) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::check_width(std::size_t n) {
  if (n != width_) {
    throw ContractError(path_.string() + ": row has " + std::to_string(n) + " fields, header has " +
                        std::to_string(width_));
  }
}

void CsvWriter::row(std::span<const double> values) { row({}, values); }

void CsvWriter::row(std::span<const std::string> text, std::span<const double> values) {
  check_width(text.size() + values.size());
  bool first = true;
  for (const auto& t : text) {
    out_ << (first ? "" : ",") << t;
    first = false;
  }
  for (double v : values) {
    out_ << (first ? "" : ",") << format_double(v);
    first = false;
  }
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw IoError("failed writing " + path_.string());
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw IoError("missing column '" + std::string(name) + "'");
}

std::vector<double> CsvTable::numeric_column(std::string_view name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.push_back(parse_double(rows[r][c], "row " + std::to_string(r + 2) + " column " + std::string(name)));
  }
  return out;
}

CsvTable read_csv(const std::filesystem::path& path, std::optional<std::vector<std::string>> expected_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": missing header row");
  if (!line.empty() && line.back() == '\r') throw IoError(path.string() + ": CRLF line endings");
  table.header = split_line(line);
  if (expected_header && table.header != *expected_header) {
    throw IoError(path.string() + ": unexpected header '" + line + "'");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) throw IoError(path.string() + ": empty line " + std::to_string(lineno));
    auto fields = split_line(line);
    if (fields.size() != table.header.size()) {
      throw IoError(path.string() + ": line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                    " fields, expected " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

}  // namespace abpinn::io
