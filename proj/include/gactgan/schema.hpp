#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gactgan/table.hpp"

namespace gactgan {

enum class ColumnKind { continuous, categorical };

std::string to_string(ColumnKind kind);
ColumnKind column_kind_from_string(const std::string& s);

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  std::vector<std::string> categories;  // sorted, categorical only
  int modes = 10;                       // upper bound on mixture modes, continuous only
};

using Schema = std::vector<ColumnSchema>;
using KindOverrides = std::map<std::string, ColumnKind>;

/// Throws DataError on duplicate names, empty/duplicate categories or modes < 1.
void validate_schema(const Schema& schema);

/// Numeric-parsable columns default to continuous; everything else is
/// categorical with its observed labels sorted lexicographically.
Schema infer_schema(const Table& table, const KindOverrides& overrides = {});
Schema infer_schema(const std::filesystem::path& csv_path, const KindOverrides& overrides = {});

/// Throws DataError when the table header differs from the schema names.
void check_table_matches(const Table& table, const Schema& schema);

/// Finite double parse of a whole cell; nullopt otherwise.
std::optional<double> parse_number(const std::string& cell);

/// Empty, "NaN", "nan", "NA" and "null" cells count as missing.
bool is_missing(const std::string& cell);

nlohmann::json schema_to_json(const Schema& schema);
Schema schema_from_json(const nlohmann::json& j);

}  // namespace gactgan
