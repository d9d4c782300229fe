#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cbstrat {

// Minimal strict CSV support for the toolkit's flat file formats: no quoting,
// no embedded separators, one header line. Field errors report row numbers.

struct CsvRow {
  std::size_t line_no = 0;  // 1-based, header is line 1
  std::vector<std::string_view> fields;
};

class CsvReader {
 public:
  // Loads the whole file; throws DataError on missing file or header mismatch.
  CsvReader(const std::string& path, const std::string& expected_header);

  // Returns false at end of file. Skips blank lines.
  bool next(CsvRow& row);

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::string content_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 1;
};

double parse_double_field(const CsvRow& row, std::size_t idx, const std::string& path,
                          const char* what);
long parse_long_field(const CsvRow& row, std::size_t idx, const std::string& path,
                      const char* what);

void require_fields(const CsvRow& row, std::size_t n, const std::string& path);

// Formatting helpers shared by all emitters: monetary and quantity values are
// fixed at 4 decimals so written files are canonical and round-trip exactly.
std::string format_money(double v);
std::string format_fraction(double v);  // 6 decimals, for unitless ratios

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace cbstrat
