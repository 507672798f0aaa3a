#include <doctest.h>

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "gactgan/error.hpp"
#include "gactgan/mixture.hpp"
#include "gactgan/schema.hpp"
#include "gactgan/transformer.hpp"

using namespace gactgan;

namespace {

std::vector<double> normal_draws(std::size_t n, double mu, double sigma, Rng& rng) {
  std::normal_distribution<double> d(mu, sigma);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

DataTransformer hand_made(double mu, double sigma) {
  nlohmann::json j = {
      {"schema",
       nlohmann::json::array({{{"name", "x"}, {"kind", "continuous"}, {"modes", 1}},
                              {{"name", "c"}, {"kind", "categorical"}, {"categories", {"A", "B", "C"}}}})},
      {"continuous", {{"x", {{"means", {mu}}, {"stds", {sigma}}, {"weights", {1.0}}, {"valid", {true}}}}}}};
  return DataTransformer::from_json(j);
}

}  // namespace

TEST_CASE("EM selection: one Gaussian gives one mode") {
  Rng rng(1);
  auto x = normal_draws(5000, 0.0, 1.0, rng);
  auto fit = select_gaussian_mixture(x);
  CHECK(fit.means.size() == 1);
  CHECK(fit.means[0] == doctest::Approx(0.0).epsilon(0.1));
}

TEST_CASE("EM selection: bimodal data gives two modes near ±5") {
  Rng rng(2);
  auto x = normal_draws(5000, -5.0, 1.0, rng);
  auto y = normal_draws(5000, 5.0, 1.0, rng);
  x.insert(x.end(), y.begin(), y.end());
  auto fit = select_gaussian_mixture(x);
  REQUIRE(fit.means.size() == 2);
  auto lo = std::min(fit.means[0], fit.means[1]);
  auto hi = std::max(fit.means[0], fit.means[1]);
  CHECK(std::abs(lo + 5.0) < 0.5);
  CHECK(std::abs(hi - 5.0) < 0.5);
  double wsum = 0.0;
  for (double w : fit.weights) wsum += w;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("transformer fit keeps one mode for N(0,1) and two for a bimodal column") {
  Rng rng(3);
  Table t;
  t.header = {"uni", "bi"};
  auto u = normal_draws(5000, 0.0, 1.0, rng);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (std::size_t i = 0; i < u.size(); ++i)
    t.rows.push_back({fmt::format("{}", u[i]), fmt::format("{}", (coin(rng) ? 5.0 : -5.0) + n01(rng))});
  auto tr = DataTransformer::fit(t, infer_schema(t));
  CHECK(tr.continuous(0).valid_modes().size() == 1);
  CHECK(tr.continuous(1).valid_modes().size() == 2);
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& ct = tr.continuous(c);
    double s = 0.0;
    for (double w : ct.mode_weights) s += w;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    for (double sd : ct.mode_stds) CHECK(sd > 0.0);
  }
}

TEST_CASE("constant column gets one floored mode") {
  Table t;
  t.header = {"k"};
  for (int i = 0; i < 50; ++i) t.rows.push_back({"3"});
  auto tr = DataTransformer::fit(t, infer_schema(t));
  const auto& ct = tr.continuous(0);
  REQUIRE(ct.valid_modes().size() == 1);
  CHECK(ct.mode_stds[ct.valid_modes()[0]] >= 1e-4 * 4.0 - 1e-12);
  Rng rng(1);
  auto enc = tr.encode(std::vector<std::string>{"3"}, rng);
  CHECK(tr.decode(enc)[0] == "3");
}

TEST_CASE("encode formula and categorical one-hot") {
  auto tr = hand_made(0.0, 2.0);
  const auto& layout = tr.layout();
  CHECK(layout.width == 1 + 1 + 3);
  Rng rng(4);
  auto v = tr.encode(std::vector<std::string>{"2", "B"}, rng);
  CHECK(v == std::vector<double>{0.25, 1.0, 0.0, 1.0, 0.0});
  CHECK(tr.category_index(1, "C") == 2);
  CHECK(tr.decode(std::vector<double>{0.25, 1.0, 0.0, 1.0, 0.0}) == std::vector<std::string>{"2", "B"});
  CHECK_THROWS_AS(tr.encode(std::vector<std::string>{"2", "Z"}, rng), DataError);
  CHECK_THROWS_AS(tr.decode(std::vector<double>{NAN, 1.0, 0.0, 1.0, 0.0}), DataError);
}

TEST_CASE("alpha is clamped to [-1, 1]") {
  auto tr = hand_made(0.0, 1.0);
  Rng rng(5);
  auto v = tr.encode(std::vector<std::string>{"100", "A"}, rng);
  CHECK(v[0] == 1.0);
  CHECK(tr.decode(v)[0] == "4");
}

TEST_CASE("layout spans are contiguous and cover the width") {
  Table t;
  t.header = {"a", "x", "b"};
  Rng rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 400; ++i)
    t.rows.push_back({i % 3 ? "p" : "q", fmt::format("{}", n(rng) + (i % 2 ? 6 : -6)), i % 5 ? "u" : "v"});
  auto tr = DataTransformer::fit(t, infer_schema(t));
  std::size_t next = 0;
  for (const auto& s : tr.layout().output_spans()) {
    CHECK(s.offset == next);
    next += s.width;
  }
  CHECK(next == tr.layout().width);
  CHECK(tr.layout().cond_width == 4);
}

TEST_CASE("round trip of 1,000 random rows") {
  Rng rng(7);
  Table t;
  t.header = {"x", "c", "y"};
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<int> cat(0, 63);
  for (int i = 0; i < 1000; ++i)
    t.rows.push_back({fmt::format("{}", 3.0 * n(rng) + (i % 2 ? 10 : 0)), fmt::format("k{}", cat(rng)),
                      fmt::format("{}", n(rng))});
  auto tr = DataTransformer::fit(t, infer_schema(t));
  auto enc = tr.encode_table(t, rng);
  auto back = tr.decode_table(enc);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    CHECK(back.rows[r][1] == t.rows[r][1]);
    for (std::size_t c : {0u, 2u}) {
      const auto& blk = tr.layout().blocks[c];
      double alpha = enc(static_cast<Eigen::Index>(blk.scalar_slot), static_cast<Eigen::Index>(r));
      if (std::abs(alpha) >= 1.0) continue;
      double x = *parse_number(t.rows[r][c]);
      double xh = *parse_number(back.rows[r][c]);
      CHECK(std::abs(x - xh) <= 1e-6 * (1.0 + std::abs(x)));
    }
  }
  // One-hot spans hold exactly one 1.
  for (const auto& s : tr.layout().output_spans()) {
    if (s.activation != SpanActivation::softmax) continue;
    for (Eigen::Index r = 0; r < enc.cols(); ++r) {
      auto col = enc.col(r).segment(static_cast<Eigen::Index>(s.offset), static_cast<Eigen::Index>(s.width));
      CHECK(col.sum() == 1.0);
      CHECK(col.maxCoeff() == 1.0);
    }
  }
}

TEST_CASE("mode sampling follows responsibilities") {
  Rng rng(8);
  Table t;
  t.header = {"x"};
  auto a = normal_draws(3000, -1.0, 1.0, rng);
  auto b = normal_draws(3000, 1.5, 1.0, rng);
  for (double v : a) t.rows.push_back({fmt::format("{}", v)});
  for (double v : b) t.rows.push_back({fmt::format("{}", v)});
  auto tr = DataTransformer::fit(t, infer_schema(t));
  const auto& ct = tr.continuous(0);
  const double x = 0.3;
  auto resp = ct.responsibilities(x);
  const auto& blk = tr.layout().blocks[0];
  std::vector<double> freq(blk.span_width, 0.0);
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    auto v = tr.encode(std::vector<std::string>{"0.3"}, rng);
    for (std::size_t k = 0; k < blk.span_width; ++k) freq[k] += v[blk.span_offset + k] / draws;
  }
  auto valid = ct.valid_modes();
  REQUIRE(valid.size() == blk.span_width);
  for (std::size_t k = 0; k < valid.size(); ++k) CHECK(std::abs(freq[k] - resp[valid[k]]) <= 0.03);
}

TEST_CASE("missing cells are rejected") {
  Table t;
  t.header = {"x", "c"};
  t.rows = {{"1", "a"}, {"2", "b"}, {"", "a"}};
  Schema s{{"x", ColumnKind::continuous, {}, 10}, {"c", ColumnKind::categorical, {"a", "b"}, 10}};
  CHECK_THROWS_WITH_AS(DataTransformer::fit(t, s), doctest::Contains("'x'"), DataError);
}

TEST_CASE("transformer JSON round trip preserves encoding") {
  auto tr = hand_made(1.0, 0.5);
  auto back = DataTransformer::from_json(tr.to_json());
  Rng r1(1), r2(1);
  CHECK(tr.encode(std::vector<std::string>{"1.2", "C"}, r1) == back.encode(std::vector<std::string>{"1.2", "C"}, r2));
}
