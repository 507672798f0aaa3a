#include <doctest.h>

#include <cmath>

#include "gactgan/cond_sampler.hpp"
#include "gactgan/schema.hpp"
#include "gactgan/transformer.hpp"

using namespace gactgan;

namespace {

struct Fixture {
  DataTransformer tr;
  Eigen::MatrixXd enc;
  Table table;
};

Fixture make(std::size_t a_count, std::size_t b_count) {
  Fixture f;
  f.table.header = {"c", "d"};
  for (std::size_t i = 0; i < a_count; ++i) f.table.rows.push_back({"A", i % 2 ? "x" : "y"});
  for (std::size_t i = 0; i < b_count; ++i) f.table.rows.push_back({"B", "x"});
  f.tr = DataTransformer::fit(f.table, infer_schema(f.table));
  Rng rng(1);
  f.enc = f.tr.encode_table(f.table, rng);
  return f;
}

}  // namespace

TEST_CASE("training draws follow log(1 + count)") {
  auto f = make(90, 10);
  CondSampler s(f.tr.layout(), f.enc);
  auto p = s.training_probabilities(0);
  const double pa = std::log(91.0) / (std::log(91.0) + std::log(11.0));
  CHECK(p[0] == doctest::Approx(pa).epsilon(1e-12));

  Rng rng(2);
  std::size_t a = 0, on_c = 0;
  const std::size_t n = 20000;
  auto batch = s.sample_train(n, rng);
  for (std::size_t i = 0; i < n; ++i)
    if (batch.column[i] == 0) {
      ++on_c;
      a += batch.category[i] == 0;
    }
  CHECK(std::abs(static_cast<double>(on_c) / n - 0.5) < 0.02);
  CHECK(std::abs(static_cast<double>(a) / on_c - pa) < 0.02);
}

TEST_CASE("synthesis draws follow raw frequency") {
  auto f = make(90, 10);
  CondSampler s(f.tr.layout(), f.enc);
  auto p = s.original_probabilities(0);
  CHECK(p[0] == doctest::Approx(0.9));
  Rng rng(3);
  auto batch = s.sample_original(20000, rng);
  std::size_t a = 0, on_c = 0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    if (batch.column[i] == 0) {
      ++on_c;
      a += batch.category[i] == 0;
    }
  CHECK(std::abs(static_cast<double>(a) / on_c - 0.9) < 0.02);
}

TEST_CASE("cond vectors are one-hot and matched rows carry the category") {
  auto f = make(30, 12);
  CondSampler s(f.tr.layout(), f.enc);
  Rng rng(4);
  auto batch = s.sample_train(500, rng);
  const auto& layout = f.tr.layout();
  CHECK(batch.vectors.rows() == static_cast<Eigen::Index>(layout.cond_width));
  auto cats = layout.categorical_blocks();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto v = batch.vectors.col(static_cast<Eigen::Index>(i));
    CHECK(v.sum() == 1.0);
    CHECK(v.maxCoeff() == 1.0);
    const auto& blk = layout.blocks[cats[static_cast<std::size_t>(batch.column[i])]];
    CHECK(v[static_cast<Eigen::Index>(blk.cond_offset + batch.category[i])] == 1.0);
    const auto& row = f.table.rows[batch.real_rows[i]];
    CHECK(f.tr.category_index(blk.column, row[blk.column]) == batch.category[i]);
  }
  for (std::size_t c = 0; c < s.num_columns(); ++c)
    for (std::size_t k = 0; k < s.counts()[c].size(); ++k)
      if (s.counts()[c][k] > 0) CHECK_FALSE(s.rows_with(c, k).empty());
}

TEST_CASE("no categorical column means unconditional batches") {
  Table t;
  t.header = {"x"};
  for (int i = 0; i < 20; ++i) t.rows.push_back({std::to_string(i)});
  auto tr = DataTransformer::fit(t, infer_schema(t));
  Rng rng(5);
  auto enc = tr.encode_table(t, rng);
  CondSampler s(tr.layout(), enc);
  auto b = s.sample_train(8, rng);
  CHECK(s.cond_dim() == 0);
  CHECK(b.vectors.rows() == 0);
  CHECK(b.size() == 8);
  CHECK(b.column[0] == -1);
}

TEST_CASE("count-only sampler reproduces synthesis draws") {
  auto f = make(40, 7);
  CondSampler s(f.tr.layout(), f.enc);
  auto c = CondSampler::from_json(f.tr.layout(), s.to_json());
  Rng r1(9), r2(9);
  CHECK(s.sample_original(64, r1).vectors == c.sample_original(64, r2).vectors);
}
