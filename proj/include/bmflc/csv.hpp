#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bmflc/serialize.hpp"

namespace bmflc {

/// Missing columns, ragged rows or non-numeric cells.
class CsvSchemaError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  bool has_column(std::string_view name) const;
  /// Throws CsvSchemaError if the column is missing.
  std::size_t column(std::string_view name) const;
  /// Parses every cell of the column as a double.
  std::vector<double> numeric(std::string_view name) const;
};

/// Reads a header row plus data rows. Double-quoted fields may contain commas.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

/// Shortest text that parses back to the same double.
std::string format_double(double v);
/// Empty cell for a missing value.
std::string format_cell(const std::optional<double>& v);

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header);
  /// Throws std::invalid_argument if the cell count differs from the header.
  void row(const std::vector<std::string>& cells);

 private:
  std::ostream& out_;
  std::size_t width_;
};

}  // namespace bmflc
