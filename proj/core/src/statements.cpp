#include <algorithm>
#include <sstream>

#include "prism/corpus.hpp"
#include "prism/error.hpp"
#include "prism/fsutil.hpp"

namespace prism {
namespace {

struct CsvRow {
  std::vector<std::string> fields;
  std::size_t line = 0;  // physical line where the record starts
};

// RFC-4180: comma separated, optional double-quoted fields with "" escapes,
// CRLF or LF terminators, newlines allowed inside quotes.
std::vector<CsvRow> parse_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  std::size_t line = 1;
  row.line = 1;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool row_has_content = false;

  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_row = [&] {
    end_field();
    if (row_has_content) rows.push_back(std::move(row));
    row = CsvRow{};
    row_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw DataError("line " + std::to_string(line) + ": stray quote inside unquoted field");
        }
        in_quotes = true;
        field_was_quoted = true;
        row_has_content = true;
        break;
      case ',':
        end_field();
        row_has_content = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        end_row();
        ++line;
        row.line = line;
        break;
      default:
        if (field_was_quoted) {
          throw DataError("line " + std::to_string(line) + ": text after closing quote");
        }
        field.push_back(c);
        row_has_content = true;
    }
  }
  if (in_quotes) throw DataError("line " + std::to_string(row.line) + ": unterminated quoted field");
  end_row();
  return rows;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string csv_quote(std::string_view s) {
  const bool needs = s.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::vector<StatementRecord> parse_statement_csv(std::string_view content,
                                                 std::string_view domain) {
  const auto rows = parse_csv(content);
  if (rows.empty()) throw DataError("line 1: missing header row");

  const auto& header = rows.front().fields;
  auto column = [&](std::string_view name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    throw DataError("line 1: header lacks column '" + std::string(name) + "'");
  };
  const std::size_t statement_col = column("statement");
  const std::size_t label_col = column("label");

  std::vector<StatementRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "line " + std::to_string(row.line);
    if (row.fields.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(row.fields.size()));
    }
    const std::string_view statement = row.fields[statement_col];
    if (trim(statement).empty()) throw DataError(where + ": empty statement");
    const std::string_view label = trim(row.fields[label_col]);
    if (label != "0" && label != "1") {
      throw DataError(where + ": label must be 0 or 1, got '" + std::string(label) + "'");
    }
    records.push_back(StatementRecord{records.size(), std::string(statement),
                                      static_cast<std::uint8_t>(label == "1"), std::string(domain)});
  }
  return records;
}

std::vector<StatementRecord> load_statement_csv(const std::filesystem::path& path,
                                                std::string_view domain) {
  if (!std::filesystem::exists(path)) throw DataError("no such file: " + path.string());
  try {
    return parse_statement_csv(read_file(path), domain);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_statement_csv(const std::filesystem::path& path,
                         std::span<const StatementRecord> records) {
  std::string out = "statement,label\n";
  for (const auto& r : records) {
    out += csv_quote(r.statement);
    out += r.label ? ",1\n" : ",0\n";
  }
  atomic_write_file(path, out);
}

}  // namespace prism
