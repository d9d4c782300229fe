#include "cbstrat/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cbstrat/errors.hpp"

namespace cbstrat {

CsvReader::CsvReader(const std::string& path, const std::string& expected_header) : path_(path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  content_ = ss.str();

  std::size_t eol = content_.find('\n');
  std::string_view header(content_.data(), eol == std::string::npos ? content_.size() : eol);
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  if (header != expected_header) {
    throw DataError("'" + path + "': bad header, expected '" + expected_header + "'");
  }
  pos_ = eol == std::string::npos ? content_.size() : eol + 1;
}

bool CsvReader::next(CsvRow& row) {
  while (pos_ < content_.size()) {
    std::size_t eol = content_.find('\n', pos_);
    if (eol == std::string::npos) eol = content_.size();
    std::string_view line(content_.data() + pos_, eol - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = eol < content_.size() ? eol + 1 : content_.size();
    ++line_no_;
    if (line.empty()) continue;

    row.line_no = line_no_;
    row.fields.clear();
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string_view::npos) {
        row.fields.push_back(line.substr(start));
        break;
      }
      row.fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    return true;
  }
  return false;
}

void require_fields(const CsvRow& row, std::size_t n, const std::string& path) {
  if (row.fields.size() != n) {
    throw DataError("'" + path + "' line " + std::to_string(row.line_no) + ": expected " +
                    std::to_string(n) + " fields, got " + std::to_string(row.fields.size()));
  }
}

double parse_double_field(const CsvRow& row, std::size_t idx, const std::string& path,
                          const char* what) {
  const std::string_view f = row.fields[idx];
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(v)) {
    throw DataError("'" + path + "' line " + std::to_string(row.line_no) + ": bad " + what + " '" +
                    std::string(f) + "'");
  }
  return v;
}

long parse_long_field(const CsvRow& row, std::size_t idx, const std::string& path,
                      const char* what) {
  const std::string_view f = row.fields[idx];
  long v = 0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc{} || ptr != f.data() + f.size()) {
    throw DataError("'" + path + "' line " + std::to_string(row.line_no) + ": bad " + what + " '" +
                    std::string(f) + "'");
  }
  return v;
}

std::string format_money(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string format_fraction(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cbstrat
