// Shared fixtures and brute-force oracles for the unit and acceptance tests.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gactgan/cond_sampler.hpp"
#include "gactgan/discriminator.hpp"
#include "gactgan/generator.hpp"
#include "gactgan/losses.hpp"
#include "gactgan/metrics.hpp"
#include "gactgan/table.hpp"
#include "gactgan/transformer.hpp"

namespace support {

using namespace gactgan;

/// x ~ ½N(−5,1) + ½N(5,1); a depends on the component of x, b copies a with
/// probability 0.7 and is uniform otherwise.
Table bimodal_toy(std::size_t n, std::uint64_t seed);

/// Random mixed table for metric oracles: `cats` categorical columns with
/// labels drawn from small alphabets and one continuous column "v".
Table random_table(std::size_t n, std::size_t cats, std::size_t labels, std::uint64_t seed);

/// Tiny networks (≤ 50 parameters each) over a one-continuous,
/// one-binary-categorical table.
struct TinyModel {
  DataTransformer transformer;
  Eigen::MatrixXd encoded;
  CondSampler sampler;
  GeneratorNet generator;
  DiscriminatorNet critic;
};
TinyModel tiny_model(std::uint64_t seed);

/// ‖a − f‖ / max(‖a‖, ‖f‖, 1e-8).
double relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric);

/// Central differences of `f` around `theta` with step h.
Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& theta, double h);

struct GradientReport {
  std::size_t points = 0;
  double worst = 0.0;
};

/// Checks the critic and generator objectives of `loss` at `points` random
/// parameter vectors. Every evaluation replays the same rng stream.
GradientReport check_critic_gradient(LossKind loss, std::size_t points, std::uint64_t seed);
GradientReport check_generator_gradient(LossKind loss, std::size_t points, std::uint64_t seed);

// Brute-force oracles: linear scans only, no hashing or sorting shortcuts.
double roc_oracle(const Table& original, const Table& synthetic,
                  const std::vector<std::string>& columns, const Schema& schema);
TcapResult tcap_oracle(const Table& original, const Table& synthetic,
                       const std::vector<std::string>& keys, const std::string& target,
                       double threshold);
std::vector<bool> pareto_oracle(const std::vector<RuPoint>& points);

}  // namespace support
