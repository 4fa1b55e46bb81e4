#include "bmflc/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace bmflc {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
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
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw CsvSchemaError("unterminated quote in CSV line");
  cells.push_back(std::move(cur));
  return cells;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

bool CsvTable::has_column(std::string_view name) const {
  for (const auto& h : header)
    if (h == name) return true;
  return false;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw CsvSchemaError("missing column '" + std::string(name) + "'");
}

std::vector<double> CsvTable::numeric(std::string_view name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& cell = rows[r][c];
    double v = 0.0;
    const auto* end = cell.data() + cell.size();
    const auto res = std::from_chars(cell.data(), end, v);
    if (cell.empty() || res.ec != std::errc() || res.ptr != end)
      throw CsvSchemaError("non-numeric value '" + cell + "' in column '" + std::string(name) +
                           "' at data row " + std::to_string(r + 1));
    out.push_back(v);
  }
  return out;
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    for (auto& c : cells) c = trim(std::move(c));
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw CsvSchemaError("line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                           " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw CsvSchemaError("CSV input has no header row");
  return t;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_csv(in);
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out), width_(header.size()) {
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw std::invalid_argument("CSV row width differs from the header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    if (cells[i].find_first_of(",\"\n") != std::string::npos) {
      out_ << '"';
      for (char c : cells[i]) out_ << (c == '"' ? "\"\"" : std::string(1, c));
      out_ << '"';
    } else {
      out_ << cells[i];
    }
  }
  out_ << '\n';
}

}  // namespace bmflc
