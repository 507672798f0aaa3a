#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "gactgan/error.hpp"
#include "gactgan/table.hpp"

namespace gactgan {

std::size_t Table::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw DataError(fmt::format("unknown column '{}'", name));
}

namespace {

// Reads one record; returns false at end of input. Quoted fields may span lines.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
  fields.clear();
  int c = in.get();
  if (c == EOF) return false;
  std::string field;
  bool quoted = false;
  bool after_quote = false;
  ++line_no;
  while (true) {
    if (quoted) {
      if (c == EOF) throw DataError(fmt::format("line {}: unterminated quoted field", line_no));
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(static_cast<char>(c));
      }
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      after_quote = false;
    } else if (c == '\n' || c == EOF) {
      fields.push_back(std::move(field));
      return true;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      return true;
    } else if (c == '"' && field.empty() && !after_quote) {
      quoted = true;
    } else {
      if (after_quote)
        throw DataError(fmt::format("line {}: characters after closing quote", line_no));
      field.push_back(static_cast<char>(c));
    }
    c = in.get();
  }
}

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

}  // namespace

Table parse_csv(std::istream& in) {
  Table table;
  std::vector<std::string> fields;
  std::size_t line_no = 0;
  if (!read_record(in, fields, line_no) || (fields.size() == 1 && fields[0].empty()))
    throw DataError("empty CSV: no header row");
  table.header = fields;
  while (read_record(in, fields, line_no)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != table.header.size())
      throw DataError(fmt::format("ragged CSV: row {} (line {}) has {} fields, header has {}",
                                  table.rows.size() + 1, line_no, fields.size(),
                                  table.header.size()));
    table.rows.push_back(fields);
  }
  return table;
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return parse_csv(in);
}

void write_csv(const Table& table, std::ostream& out) {
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      if (needs_quoting(row[i])) {
        out << '"';
        for (char ch : row[i]) {
          if (ch == '"') out << '"';
          out << ch;
        }
        out << '"';
      } else {
        out << row[i];
      }
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
}

void write_csv(const Table& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  write_csv(table, out);
}

}  // namespace gactgan
