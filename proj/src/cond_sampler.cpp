#include "gactgan/cond_sampler.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gactgan/error.hpp"

namespace gactgan {
namespace {

std::vector<double> normalised_cdf(const std::vector<double>& w) {
  std::vector<double> cdf(w.size());
  double total = 0.0;
  for (double v : w) total += v;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i] / total;
    cdf[i] = acc;
  }
  if (!cdf.empty()) cdf.back() = 1.0;
  return cdf;
}

std::size_t draw_index(const std::vector<double>& cdf, double u) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

}  // namespace

CondSampler::CondSampler(const EncodedLayout& layout, const Eigen::MatrixXd& encoded) {
  cond_dim_ = layout.cond_width;
  n_rows_ = static_cast<std::size_t>(encoded.cols());
  for (auto bi : layout.categorical_blocks()) {
    const auto& b = layout.blocks[bi];
    offsets_.push_back(b.cond_offset);
    std::vector<std::size_t> counts(b.span_width, 0);
    std::vector<std::vector<std::size_t>> rows(b.span_width);
    for (Eigen::Index r = 0; r < encoded.cols(); ++r) {
      Eigen::Index k;
      encoded.col(r).segment(b.span_offset, b.span_width).maxCoeff(&k);
      ++counts[k];
      rows[k].push_back(static_cast<std::size_t>(r));
    }
    counts_.push_back(std::move(counts));
    rows_.push_back(std::move(rows));
  }
  build_cdfs();
}

CondSampler CondSampler::from_counts(const EncodedLayout& layout,
                                     std::vector<std::vector<std::size_t>> counts) {
  CondSampler s;
  s.cond_dim_ = layout.cond_width;
  auto cats = layout.categorical_blocks();
  if (counts.size() != cats.size()) throw DataError("category count table does not match layout");
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const auto& b = layout.blocks[cats[i]];
    if (counts[i].size() != b.span_width)
      throw DataError("category count width does not match layout");
    s.offsets_.push_back(b.cond_offset);
  }
  s.counts_ = std::move(counts);
  s.build_cdfs();
  return s;
}

void CondSampler::build_cdfs() {
  log_cdf_.clear();
  raw_cdf_.clear();
  for (const auto& counts : counts_) {
    std::vector<double> logw(counts.size()), raw(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) {
      logw[k] = std::log1p(static_cast<double>(counts[k]));
      raw[k] = static_cast<double>(counts[k]);
    }
    log_cdf_.push_back(normalised_cdf(logw));
    raw_cdf_.push_back(normalised_cdf(raw));
  }
}

std::vector<double> CondSampler::training_probabilities(std::size_t column) const {
  std::vector<double> p(counts_.at(column).size());
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) total += p[k] = std::log1p(double(counts_[column][k]));
  for (auto& v : p) v /= total;
  return p;
}

std::vector<double> CondSampler::original_probabilities(std::size_t column) const {
  std::vector<double> p(counts_.at(column).size());
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) total += p[k] = double(counts_[column][k]);
  for (auto& v : p) v /= total;
  return p;
}

const std::vector<std::size_t>& CondSampler::rows_with(std::size_t column,
                                                       std::size_t category) const {
  return rows_.at(column).at(category);
}

CondBatch CondSampler::draw(std::size_t batch, Rng& rng, bool training) const {
  if (batch < 1) throw UsageError("condition batch must be >= 1");
  CondBatch out;
  out.vectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cond_dim_),
                                      static_cast<Eigen::Index>(batch));
  out.column.assign(batch, -1);
  out.category.assign(batch, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (training) {
    if (rows_.empty() && n_rows_ == 0)
      throw UsageError("count-only condition sampler cannot draw training rows");
    out.real_rows.resize(batch);
  }
  if (counts_.empty()) {
    if (training) {
      std::uniform_int_distribution<std::size_t> pick(0, n_rows_ - 1);
      for (auto& r : out.real_rows) r = pick(rng);
    }
    return out;
  }
  std::uniform_int_distribution<std::size_t> pick_col(0, counts_.size() - 1);
  for (std::size_t i = 0; i < batch; ++i) {
    std::size_t col = pick_col(rng);
    const auto& cdf = training ? log_cdf_[col] : raw_cdf_[col];
    std::size_t cat = draw_index(cdf, unif(rng));
    if (training) {
      // log1p weights give zero-count categories zero mass, so rows are non-empty.
      const auto& rows = rows_[col][cat];
      std::uniform_int_distribution<std::size_t> pick_row(0, rows.size() - 1);
      out.real_rows[i] = rows[pick_row(rng)];
    }
    out.column[i] = static_cast<std::ptrdiff_t>(col);
    out.category[i] = cat;
    out.vectors(static_cast<Eigen::Index>(offsets_[col] + cat), static_cast<Eigen::Index>(i)) = 1.0;
  }
  return out;
}

CondBatch CondSampler::sample_train(std::size_t batch, Rng& rng) const {
  return draw(batch, rng, true);
}

CondBatch CondSampler::sample_original(std::size_t batch, Rng& rng) const {
  return draw(batch, rng, false);
}

nlohmann::json CondSampler::to_json() const { return {{"counts", counts_}}; }

CondSampler CondSampler::from_json(const EncodedLayout& layout, const nlohmann::json& j) {
  return from_counts(layout, j.at("counts").get<std::vector<std::vector<std::size_t>>>());
}

}  // namespace gactgan
