#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gactgan/rng.hpp"
#include "gactgan/transformer.hpp"

namespace gactgan {

/// One batch of conditions. `vectors` has cond_dim rows (zero rows when the
/// data has no categorical column) and one column per batch item.
struct CondBatch {
  Eigen::MatrixXd vectors;
  std::vector<std::ptrdiff_t> column;  // categorical column ordinal, -1 when unconditional
  std::vector<std::size_t> category;
  std::vector<std::size_t> real_rows;  // matching training rows (training draws only)

  std::size_t size() const { return column.size(); }
};

/// Training-by-sampling: picks a categorical column uniformly, then a
/// category from that column's log-frequency distribution
/// (p ∝ log(1 + count)), and a real row having that category.
class CondSampler {
 public:
  CondSampler() = default;
  /// Builds from an encoded training matrix (one column per row).
  CondSampler(const EncodedLayout& layout, const Eigen::MatrixXd& encoded);

  /// Count-only sampler for synthesis; sample_train is unavailable.
  static CondSampler from_counts(const EncodedLayout& layout,
                                 std::vector<std::vector<std::size_t>> counts);

  std::size_t cond_dim() const { return cond_dim_; }
  std::size_t num_columns() const { return counts_.size(); }
  bool has_rows() const { return !rows_.empty() || n_rows_ > 0; }

  CondBatch sample_train(std::size_t batch, Rng& rng) const;
  /// Conditions for synthesis: category drawn by its raw training frequency.
  CondBatch sample_original(std::size_t batch, Rng& rng) const;

  std::vector<double> training_probabilities(std::size_t column) const;
  std::vector<double> original_probabilities(std::size_t column) const;
  const std::vector<std::vector<std::size_t>>& counts() const { return counts_; }
  /// Training rows holding `category` in categorical column `column`.
  const std::vector<std::size_t>& rows_with(std::size_t column, std::size_t category) const;

  nlohmann::json to_json() const;  // counts only
  static CondSampler from_json(const EncodedLayout& layout, const nlohmann::json& j);

 private:
  void build_cdfs();
  CondBatch draw(std::size_t batch, Rng& rng, bool training) const;

  std::size_t cond_dim_ = 0;
  std::size_t n_rows_ = 0;
  std::vector<std::size_t> offsets_;  // per categorical column, inside the cond vector
  std::vector<std::vector<std::size_t>> counts_;
  std::vector<std::vector<std::vector<std::size_t>>> rows_;
  std::vector<std::vector<double>> log_cdf_;
  std::vector<std::vector<double>> raw_cdf_;
};

}  // namespace gactgan
