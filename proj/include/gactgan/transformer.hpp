#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gactgan/rng.hpp"
#include "gactgan/schema.hpp"
#include "gactgan/table.hpp"

namespace gactgan {

/// Mode-specific normalisation parameters of one continuous column.
/// All four lists have one entry per fitted mode; pruned modes keep their
/// entries but are masked out.
struct ContinuousTransform {
  std::vector<double> mode_means;
  std::vector<double> mode_stds;
  std::vector<double> mode_weights;
  std::vector<bool> valid_mode_mask;

  std::vector<std::size_t> valid_modes() const;
  /// Mixture responsibilities over all modes (zero for masked modes).
  std::vector<double> responsibilities(double x) const;
};

enum class SpanActivation { tanh, softmax };

struct OutputSpan {
  std::size_t offset = 0;
  std::size_t width = 0;
  SpanActivation activation = SpanActivation::tanh;
};

struct ColumnBlock {
  std::size_t column = 0;
  ColumnKind kind = ColumnKind::continuous;
  std::size_t scalar_slot = 0;  // continuous only
  std::size_t span_offset = 0;  // mode one-hot (continuous) or category one-hot
  std::size_t span_width = 0;
  std::size_t cond_offset = 0;  // categorical only: offset inside the conditional vector
};

/// Per-column interleaved layout: a continuous column occupies its scalar
/// slot followed by its mode span; a categorical column occupies a one-hot
/// span. Blocks are contiguous and cover [0, width).
struct EncodedLayout {
  std::vector<ColumnBlock> blocks;
  std::size_t width = 0;
  std::size_t cond_width = 0;  // sum of categorical span widths

  std::vector<OutputSpan> output_spans() const;
  /// Indices into `blocks` of the categorical columns, in schema order.
  std::vector<std::size_t> categorical_blocks() const;
};

struct TransformerOptions {
  int max_modes = 10;
  double prune_threshold = 0.005;
};

/// Reversible mixed-type encoder. Immutable after fit.
class DataTransformer {
 public:
  DataTransformer() = default;

  static DataTransformer fit(const Table& table, const Schema& schema,
                             const TransformerOptions& options = {});

  /// Encodes one row. Continuous cells draw their mode from the mixture
  /// responsibilities using `rng`.
  std::vector<double> encode(std::span<const std::string> row, Rng& rng) const;
  /// Encodes every row; column i of the result is row i.
  Eigen::MatrixXd encode_table(const Table& table, Rng& rng) const;

  std::vector<std::string> decode(std::span<const double> encoded) const;
  Table decode_table(const Eigen::MatrixXd& encoded) const;

  const Schema& schema() const { return schema_; }
  const EncodedLayout& layout() const { return layout_; }
  const ContinuousTransform& continuous(std::size_t column) const;
  std::size_t category_index(std::size_t column, const std::string& label) const;

  nlohmann::json to_json() const;
  static DataTransformer from_json(const nlohmann::json& j);

 private:
  void build_layout();

  Schema schema_;
  std::vector<ContinuousTransform> continuous_;  // indexed by column; empty for categorical
  std::vector<std::unordered_map<std::string, std::size_t>> category_index_;
  EncodedLayout layout_;
};

/// Shortest round-trip decimal text of a double.
std::string format_number(double value);

}  // namespace gactgan
