#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pharmatimeline {

struct CsvRow {
  std::vector<std::string> fields;
  size_t line_no = 0;  // 1-based line in the source file
};

// RFC-4180-style parsing: comma separated, optional double-quoted fields with
// "" escapes. Fields never span lines. Blank lines are skipped.
std::vector<CsvRow> parse_csv(std::string_view text, const std::string& origin);

// Reads the whole file. Throws PipelineError(MissingFile) when the file does
// not exist and ParseError on malformed content.
std::vector<CsvRow> read_csv(const std::string& path);

// Header lookup for loader code. Column names are matched case-insensitively
// after trimming; missing required columns raise ParseError naming the column.
class CsvHeader {
 public:
  CsvHeader(const CsvRow& header_row, const std::string& origin);

  size_t require(const std::string& name) const;
  std::optional<size_t> find(const std::string& name) const;

  // Ragged rows are schema errors: every data row must match the header width.
  void check_width(const CsvRow& row) const;

  // Field access with bounds handling: out-of-range cells read as empty.
  static std::string_view field(const CsvRow& row, size_t index);

 private:
  std::unordered_map<std::string, size_t> index_;
  size_t width_ = 0;
  std::string origin_;
};

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& os, std::span<const std::string> fields);

// Reads an entire file into memory; MissingFile error when absent.
std::string read_file(const std::string& path);

}  // namespace pharmatimeline
