#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace abpinn::io {

/// Shortest round-trip form with 17 significant digits ("%.17g").
std::string format_double(double v);

/// Strict decimal parse; the whole field must be consumed and the value
/// finite. Throws IoError naming `context` otherwise.
double parse_double(std::string_view field, std::string_view context);

/// Comma-separated writer with LF line endings.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::span<const std::string> header);

  void row(std::span<const double> values);
  /// Leading text fields followed by numbers.
  void row(std::span<const std::string> text, std::span<const double> values);
  void close();

 private:
  void check_width(std::size_t n);

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t width_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws IoError when absent.
  std::size_t column(std::string_view name) const;
  std::vector<double> numeric_column(std::string_view name) const;
};

/// Reads a CSV file, requiring a header row and the same column count on
/// every row. With `expected_header`, the header must match exactly.
CsvTable read_csv(const std::filesystem::path& path,
                  std::optional<std::vector<std::string>> expected_header = std::nullopt);

std::vector<std::string> split_line(std::string_view line);

}  // namespace abpinn::io
