#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace gactgan {

/// Row-major table of raw string cells as read from CSV. Typing lives in the
/// schema; the table itself never interprets values.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t num_rows() const { return rows.size(); }
  std::size_t num_cols() const { return header.size(); }

  /// Throws DataError when the column is absent.
  std::size_t column_index(std::string_view name) const;
};

/// RFC-4180 reader: comma separated, double-quote quoting with "" escapes,
/// CRLF or LF line endings. The first record is the header.
Table parse_csv(std::istream& in);
Table read_csv(const std::filesystem::path& path);

void write_csv(const Table& table, std::ostream& out);
void write_csv(const Table& table, const std::filesystem::path& path);

}  // namespace gactgan
