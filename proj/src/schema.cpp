#include "gactgan/schema.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "gactgan/error.hpp"

namespace gactgan {

std::string to_string(ColumnKind kind) {
  return kind == ColumnKind::continuous ? "continuous" : "categorical";
}

ColumnKind column_kind_from_string(const std::string& s) {
  if (s == "continuous") return ColumnKind::continuous;
  if (s == "categorical") return ColumnKind::categorical;
  throw DataError(fmt::format("unknown column kind '{}'", s));
}

std::optional<double> parse_number(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (*first == '+') ++first;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NaN" || cell == "nan" || cell == "NA" || cell == "null";
}

void validate_schema(const Schema& schema) {
  std::set<std::string> names;
  for (const auto& col : schema) {
    if (!names.insert(col.name).second)
      throw DataError(fmt::format("duplicate column name '{}'", col.name));
    if (col.kind == ColumnKind::categorical) {
      if (col.categories.empty())
        throw DataError(fmt::format("categorical column '{}' has no categories", col.name));
      std::set<std::string> seen(col.categories.begin(), col.categories.end());
      if (seen.size() != col.categories.size())
        throw DataError(fmt::format("categorical column '{}' has duplicate categories", col.name));
    } else if (col.modes < 1) {
      throw DataError(fmt::format("continuous column '{}' needs modes >= 1", col.name));
    }
  }
}

Schema infer_schema(const Table& table, const KindOverrides& overrides) {
  if (table.rows.empty()) throw DataError("cannot infer schema: table has no rows");
  {
    std::set<std::string> names;
    for (const auto& h : table.header)
      if (!names.insert(h).second) throw DataError(fmt::format("duplicate column name '{}'", h));
  }
  for (const auto& [name, kind] : overrides) table.column_index(name);

  Schema schema;
  for (std::size_t c = 0; c < table.num_cols(); ++c) {
    ColumnSchema col;
    col.name = table.header[c];
    bool numeric = true;
    for (const auto& row : table.rows) {
      if (!parse_number(row[c])) {
        numeric = false;
        break;
      }
    }
    col.kind = numeric ? ColumnKind::continuous : ColumnKind::categorical;
    if (auto it = overrides.find(col.name); it != overrides.end()) {
      if (it->second == ColumnKind::continuous && !numeric)
        throw DataError(fmt::format("column '{}' is not numeric; cannot be continuous", col.name));
      col.kind = it->second;
    }
    if (col.kind == ColumnKind::categorical) {
      std::set<std::string> labels;
      for (const auto& row : table.rows) labels.insert(row[c]);
      col.categories.assign(labels.begin(), labels.end());
    }
    schema.push_back(std::move(col));
  }
  validate_schema(schema);
  return schema;
}

Schema infer_schema(const std::filesystem::path& csv_path, const KindOverrides& overrides) {
  return infer_schema(read_csv(csv_path), overrides);
}

void check_table_matches(const Table& table, const Schema& schema) {
  if (table.num_cols() != schema.size())
    throw DataError(fmt::format("table has {} columns, schema has {}", table.num_cols(),
                                schema.size()));
  for (std::size_t c = 0; c < schema.size(); ++c)
    if (table.header[c] != schema[c].name)
      throw DataError(fmt::format("column {} is '{}', schema expects '{}'", c, table.header[c],
                                  schema[c].name));
}

nlohmann::json schema_to_json(const Schema& schema) {
  auto out = nlohmann::json::array();
  for (const auto& col : schema) {
    nlohmann::json j{{"name", col.name}, {"kind", to_string(col.kind)}};
    if (col.kind == ColumnKind::categorical)
      j["categories"] = col.categories;
    else
      j["modes"] = col.modes;
    out.push_back(std::move(j));
  }
  return out;
}

Schema schema_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw DataError("schema JSON must be a list");
  Schema schema;
  for (const auto& item : j) {
    ColumnSchema col;
    col.name = item.at("name").get<std::string>();
    col.kind = column_kind_from_string(item.at("kind").get<std::string>());
    if (item.contains("categories")) col.categories = item["categories"].get<std::vector<std::string>>();
    if (item.contains("modes")) col.modes = item["modes"].get<int>();
    schema.push_back(std::move(col));
  }
  validate_schema(schema);
  return schema;
}

}  // namespace gactgan
