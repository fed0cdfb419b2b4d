#include "pharmatimeline/csv.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <ostream>
#include <sstream>

#include "pharmatimeline/errors.hpp"

namespace pharmatimeline {

namespace {

std::string normalize_header(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw PipelineError(ErrorCode::MissingFile, "cannot open file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<CsvRow> parse_csv(std::string_view text, const std::string& origin) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool in_quotes = false;
  bool row_has_content = false;
  size_t line_no = 1;
  row.line_no = 1;

  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    if (row_has_content || row.fields.size() > 0) {
      end_field();
      rows.push_back(std::move(row));
    }
    row = CsvRow{};
    row.line_no = line_no;
    field.clear();
    row_has_content = false;
  };

  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else if (c == '\n' || c == '\r') {
        throw ParseError(origin, line_no, "newline inside quoted field");
      } else {
        field.push_back(c);
      }
    } else {
      switch (c) {
        case '"':
          in_quotes = true;
          row_has_content = true;
          break;
        case ',':
          end_field();
          row_has_content = true;
          break;
        case '\r':
          break;
        case '\n':
          ++line_no;
          end_row();
          break;
        default:
          field.push_back(c);
          row_has_content = true;
          break;
      }
    }
  }
  if (in_quotes) {
    throw ParseError(origin, line_no, "unterminated quoted field");
  }
  end_row();
  return rows;
}

std::vector<CsvRow> read_csv(const std::string& path) {
  return parse_csv(read_file(path), path);
}

CsvHeader::CsvHeader(const CsvRow& header_row, const std::string& origin)
    : width_(header_row.fields.size()), origin_(origin) {
  for (size_t i = 0; i < header_row.fields.size(); ++i) {
    index_.emplace(normalize_header(header_row.fields[i]), i);
  }
}

void CsvHeader::check_width(const CsvRow& row) const {
  if (row.fields.size() != width_) {
    throw ParseError(origin_, row.line_no,
                     "expected " + std::to_string(width_) + " columns, got " +
                         std::to_string(row.fields.size()));
  }
}

size_t CsvHeader::require(const std::string& name) const {
  auto found = find(name);
  if (!found) {
    throw ParseError(origin_, 1, "missing required column '" + name + "'");
  }
  return *found;
}

std::optional<size_t> CsvHeader::find(const std::string& name) const {
  auto it = index_.find(normalize_header(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string_view CsvHeader::field(const CsvRow& row, size_t index) {
  if (index >= row.fields.size()) return {};
  return row.fields[index];
}

std::string csv_escape(std::string_view field) {
  bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

void write_csv_row(std::ostream& os, std::span<const std::string> fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << csv_escape(fields[i]);
  }
  os << '\n';
}

}  // namespace pharmatimeline
