#pragma once

// Minimal RFC 4180 style CSV with leading '#' provenance lines. Reals are
// written with "%.12e" so output is byte-stable for fixed inputs.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace lilxing::cli {

inline constexpr int kCsvSchemaVersion = 1;

using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string>;

std::string format_real(double x);
std::string format_cell(const Cell& cell);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_comment(const std::string& line) { comments_.push_back(line); }
  /// Throws std::logic_error if the row width does not match the header.
  void add_row(std::vector<Cell> row);

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return rows_.size(); }

  void write(std::ostream& out) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> comments_;
  std::vector<std::vector<std::string>> rows_;
};

/// Parsed CSV: comment lines (without '#'), header and string fields.
struct CsvData {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Index of a column; throws std::invalid_argument naming it when absent.
  std::size_t column(const std::string& name) const;
};

CsvData read_csv(std::istream& in);

}  // namespace lilxing::cli
