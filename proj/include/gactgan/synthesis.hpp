#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "gactgan/cond_sampler.hpp"
#include "gactgan/generator.hpp"
#include "gactgan/rng.hpp"
#include "gactgan/swag.hpp"
#include "gactgan/table.hpp"
#include "gactgan/transformer.hpp"

namespace gactgan {

/// Loads `theta` into `generator` and recomputes BN running statistics as
/// the cumulative average over `n_batches` training-mode passes on fresh
/// noise and original-frequency conditions. Running variances are floored
/// at 1e-5.
void refresh_bn(GeneratorNet& generator, const Eigen::VectorXd& theta, const CondSampler& sampler,
                std::size_t n_batches, std::size_t batch, Rng& rng);

struct SynthesisOptions {
  std::size_t n_sample = 0;
  std::size_t batch = 500;
  std::size_t samples = 1;     // posterior draws averaged per batch (S)
  std::size_t bn_batches = 10;
};

struct SynthesisResult {
  Table table;
  Eigen::MatrixXd encoded;  // averaged activated outputs, one column per row
  std::size_t batches = 0;
};

/// For each of ⌈n_sample/batch⌉ batches: draw noise and conditions once;
/// for s = 1..S draw θ̃, refresh BN, run the generator in eval mode and
/// accumulate the activated output / S. The average is decoded once and
/// truncated to n_sample rows.
SynthesisResult synthesize(const GeneratorPosterior& posterior, GeneratorNet& generator,
                           const DataTransformer& transformer, const CondSampler& sampler,
                           const SynthesisOptions& options, Rng& rng);

}  // namespace gactgan
