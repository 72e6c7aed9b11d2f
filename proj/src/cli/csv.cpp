#include "lilxing/cli/csv.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace lilxing::cli {

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return buf;
}

std::string format_cell(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return format_real(*d);
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  if (const auto* u = std::get_if<std::uint64_t>(&cell)) return std::to_string(*u);
  return quote_if_needed(std::get<std::string>(cell));
}

void CsvTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) {
    throw std::logic_error("CsvTable: row has " + std::to_string(row.size()) +
                           " fields, header has " + std::to_string(columns_.size()));
  }
  std::vector<std::string> fields;
  fields.reserve(row.size());
  for (const auto& c : row) fields.push_back(format_cell(c));
  rows_.push_back(std::move(fields));
}

void CsvTable::write(std::ostream& out) const {
  for (const auto& c : comments_) out << "# " << c << '\n';
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    out << (i ? "," : "") << quote_if_needed(columns_[i]);
  }
  out << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

std::size_t CsvData::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw std::invalid_argument("CSV has no column '" + name + "'");
}

CsvData read_csv(std::istream& in) {
  CsvData data;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      data.comments.push_back(line.size() > 1 && line[1] == ' ' ? line.substr(2) : line.substr(1));
      continue;
    }
    auto fields = split_record(line);
    if (!have_header) {
      data.columns = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != data.columns.size()) {
        throw std::invalid_argument("CSV row has " + std::to_string(fields.size()) +
                                    " fields, expected " + std::to_string(data.columns.size()));
      }
      data.rows.push_back(std::move(fields));
    }
  }
  if (!have_header) throw std::invalid_argument("CSV has no header row");
  return data;
}

}  // namespace lilxing::cli
