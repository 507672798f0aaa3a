#include "gactgan/transformer.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gactgan/error.hpp"
#include "gactgan/mixture.hpp"

namespace gactgan {

std::string format_number(double value) { return fmt::format("{}", value); }

std::vector<std::size_t> ContinuousTransform::valid_modes() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < valid_mode_mask.size(); ++j)
    if (valid_mode_mask[j]) out.push_back(j);
  return out;
}

std::vector<double> ContinuousTransform::responsibilities(double x) const {
  return mixture_responsibilities(x, mode_means, mode_stds, mode_weights, valid_mode_mask);
}

std::vector<OutputSpan> EncodedLayout::output_spans() const {
  std::vector<OutputSpan> spans;
  for (const auto& b : blocks) {
    if (b.kind == ColumnKind::continuous)
      spans.push_back({b.scalar_slot, 1, SpanActivation::tanh});
    spans.push_back({b.span_offset, b.span_width, SpanActivation::softmax});
  }
  return spans;
}

std::vector<std::size_t> EncodedLayout::categorical_blocks() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].kind == ColumnKind::categorical) out.push_back(i);
  return out;
}

DataTransformer DataTransformer::fit(const Table& table, const Schema& schema,
                                     const TransformerOptions& options) {
  validate_schema(schema);
  check_table_matches(table, schema);
  if (table.rows.empty()) throw DataError("cannot fit transformer on an empty table");

  DataTransformer t;
  t.schema_ = schema;
  t.continuous_.resize(schema.size());
  t.category_index_.resize(schema.size());

  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto& col = schema[c];
    for (std::size_t r = 0; r < table.rows.size(); ++r)
      if (is_missing(table.rows[r][c]))
        throw DataError(fmt::format("missing value in column '{}' at row {}", col.name, r + 1));

    if (col.kind == ColumnKind::categorical) {
      for (std::size_t i = 0; i < col.categories.size(); ++i)
        t.category_index_[c][col.categories[i]] = i;
      for (std::size_t r = 0; r < table.rows.size(); ++r)
        if (!t.category_index_[c].count(table.rows[r][c]))
          throw DataError(fmt::format("column '{}' row {}: label '{}' not in schema", col.name,
                                      r + 1, table.rows[r][c]));
      continue;
    }

    std::vector<double> values(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      auto v = parse_number(table.rows[r][c]);
      if (!v)
        throw DataError(fmt::format("column '{}' row {}: '{}' is not numeric", col.name, r + 1,
                                    table.rows[r][c]));
      values[r] = *v;
    }
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    ContinuousTransform ct;
    if (*lo == *hi) {
      ct.mode_means = {*lo};
      ct.mode_stds = {0.0};
      ct.mode_weights = {1.0};
    } else {
      MixtureOptions mo;
      mo.max_components = std::max(1, std::min(col.modes, options.max_modes));
      auto fit = select_gaussian_mixture(values, mo);
      ct.mode_means = fit.means;
      ct.mode_stds = fit.stds;
      ct.mode_weights = fit.weights;
    }
    for (std::size_t j = 0; j < ct.mode_stds.size(); ++j)
      ct.mode_stds[j] = std::max(ct.mode_stds[j], 1e-4 * (1.0 + std::abs(ct.mode_means[j])));
    ct.valid_mode_mask.resize(ct.mode_weights.size());
    std::size_t best = 0;
    for (std::size_t j = 0; j < ct.mode_weights.size(); ++j) {
      ct.valid_mode_mask[j] = ct.mode_weights[j] > options.prune_threshold;
      if (ct.mode_weights[j] > ct.mode_weights[best]) best = j;
    }
    ct.valid_mode_mask[best] = true;
    t.continuous_[c] = std::move(ct);
  }
  t.build_layout();
  return t;
}

void DataTransformer::build_layout() {
  layout_ = {};
  std::size_t offset = 0;
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    ColumnBlock b;
    b.column = c;
    b.kind = schema_[c].kind;
    if (b.kind == ColumnKind::continuous) {
      b.scalar_slot = offset++;
      b.span_offset = offset;
      b.span_width = continuous_[c].valid_modes().size();
    } else {
      b.span_offset = offset;
      b.span_width = schema_[c].categories.size();
      b.cond_offset = layout_.cond_width;
      layout_.cond_width += b.span_width;
    }
    offset += b.span_width;
    layout_.blocks.push_back(b);
  }
  layout_.width = offset;
}

const ContinuousTransform& DataTransformer::continuous(std::size_t column) const {
  if (column >= schema_.size() || schema_[column].kind != ColumnKind::continuous)
    throw DataError(fmt::format("column {} is not continuous", column));
  return continuous_[column];
}

std::size_t DataTransformer::category_index(std::size_t column, const std::string& label) const {
  auto it = category_index_.at(column).find(label);
  if (it == category_index_[column].end())
    throw DataError(fmt::format("column '{}': unknown category '{}'", schema_[column].name, label));
  return it->second;
}

std::vector<double> DataTransformer::encode(std::span<const std::string> row, Rng& rng) const {
  if (row.size() != schema_.size())
    throw DataError(fmt::format("row has {} cells, schema has {}", row.size(), schema_.size()));
  std::vector<double> out(layout_.width, 0.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const auto& b : layout_.blocks) {
    const auto& cell = row[b.column];
    if (b.kind == ColumnKind::categorical) {
      out[b.span_offset + category_index(b.column, cell)] = 1.0;
      continue;
    }
    auto value = parse_number(cell);
    if (!value)
      throw DataError(fmt::format("column '{}': '{}' is not numeric", schema_[b.column].name, cell));
    const auto& ct = continuous_[b.column];
    auto probs = ct.responsibilities(*value);
    auto valid = ct.valid_modes();
    double u = unif(rng);
    std::size_t pick = valid.size() - 1;
    double acc = 0.0;
    for (std::size_t j = 0; j < valid.size(); ++j) {
      acc += probs[valid[j]];
      if (u < acc) {
        pick = j;
        break;
      }
    }
    std::size_t mode = valid[pick];
    double alpha = (*value - ct.mode_means[mode]) / (4.0 * ct.mode_stds[mode]);
    out[b.scalar_slot] = std::clamp(alpha, -1.0, 1.0);
    out[b.span_offset + pick] = 1.0;
  }
  return out;
}

Eigen::MatrixXd DataTransformer::encode_table(const Table& table, Rng& rng) const {
  check_table_matches(table, schema_);
  Eigen::MatrixXd out(layout_.width, table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    auto v = encode(table.rows[r], rng);
    out.col(r) = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  }
  return out;
}

namespace {
std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}
}  // namespace

std::vector<std::string> DataTransformer::decode(std::span<const double> encoded) const {
  if (encoded.size() != layout_.width)
    throw DataError(fmt::format("encoded width {} does not match layout width {}", encoded.size(),
                                layout_.width));
  for (double v : encoded)
    if (!std::isfinite(v)) throw DataError("cannot decode a non-finite vector");
  std::vector<std::string> row(schema_.size());
  for (const auto& b : layout_.blocks) {
    auto span = encoded.subspan(b.span_offset, b.span_width);
    std::size_t pick = argmax(span);
    if (b.kind == ColumnKind::categorical) {
      row[b.column] = schema_[b.column].categories[pick];
      continue;
    }
    const auto& ct = continuous_[b.column];
    std::size_t mode = ct.valid_modes()[pick];
    double alpha = std::clamp(encoded[b.scalar_slot], -1.0, 1.0);
    row[b.column] = format_number(alpha * 4.0 * ct.mode_stds[mode] + ct.mode_means[mode]);
  }
  return row;
}

Table DataTransformer::decode_table(const Eigen::MatrixXd& encoded) const {
  Table out;
  for (const auto& col : schema_) out.header.push_back(col.name);
  out.rows.reserve(encoded.cols());
  std::vector<double> buf(encoded.rows());
  for (Eigen::Index r = 0; r < encoded.cols(); ++r) {
    Eigen::Map<Eigen::VectorXd>(buf.data(), buf.size()) = encoded.col(r);
    try {
      out.rows.push_back(decode(buf));
    } catch (const DataError& e) {
      throw DataError(fmt::format("row {}: {}", r, e.what()));
    }
  }
  return out;
}

nlohmann::json DataTransformer::to_json() const {
  nlohmann::json cont = nlohmann::json::object();
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    if (schema_[c].kind != ColumnKind::continuous) continue;
    const auto& ct = continuous_[c];
    cont[schema_[c].name] = {{"means", ct.mode_means},
                             {"stds", ct.mode_stds},
                             {"weights", ct.mode_weights},
                             {"valid", ct.valid_mode_mask}};
  }
  return {{"schema", schema_to_json(schema_)}, {"continuous", cont}};
}

DataTransformer DataTransformer::from_json(const nlohmann::json& j) {
  DataTransformer t;
  t.schema_ = schema_from_json(j.at("schema"));
  t.continuous_.resize(t.schema_.size());
  t.category_index_.resize(t.schema_.size());
  for (std::size_t c = 0; c < t.schema_.size(); ++c) {
    const auto& col = t.schema_[c];
    if (col.kind == ColumnKind::categorical) {
      for (std::size_t i = 0; i < col.categories.size(); ++i)
        t.category_index_[c][col.categories[i]] = i;
      continue;
    }
    const auto& cj = j.at("continuous").at(col.name);
    ContinuousTransform ct;
    ct.mode_means = cj.at("means").get<std::vector<double>>();
    ct.mode_stds = cj.at("stds").get<std::vector<double>>();
    ct.mode_weights = cj.at("weights").get<std::vector<double>>();
    ct.valid_mode_mask = cj.at("valid").get<std::vector<bool>>();
    if (ct.mode_means.size() != ct.mode_stds.size() ||
        ct.mode_means.size() != ct.mode_weights.size() ||
        ct.mode_means.size() != ct.valid_mode_mask.size() || ct.valid_modes().empty())
      throw DataError(fmt::format("inconsistent mode lists for column '{}'", col.name));
    t.continuous_[c] = std::move(ct);
  }
  t.build_layout();
  return t;
}

}  // namespace gactgan
