#include "gactgan/synthesis.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "gactgan/error.hpp"
#include "gactgan/trainer.hpp"

namespace gactgan {

using Eigen::MatrixXd;

namespace {

MatrixXd generator_input(const GeneratorNet& g, const CondSampler& sampler, std::size_t batch,
                         Rng& rng) {
  const auto noise_dim = static_cast<Eigen::Index>(g.arch().noise_dim);
  const auto b = static_cast<Eigen::Index>(batch);
  MatrixXd noise = standard_normal(noise_dim, b, rng);
  CondBatch cond = sampler.sample_original(batch, rng);
  MatrixXd input(noise_dim + cond.vectors.rows(), b);
  input.topRows(noise_dim) = noise;
  if (cond.vectors.rows() > 0) input.bottomRows(cond.vectors.rows()) = cond.vectors;
  return input;
}

}  // namespace

void refresh_bn(GeneratorNet& generator, const Eigen::VectorXd& theta, const CondSampler& sampler,
                std::size_t n_batches, std::size_t batch, Rng& rng) {
  if (n_batches < 1) throw UsageError("BN refresh needs at least one batch");
  generator.set_params(theta);
  generator.begin_bn_accumulation();
  for (std::size_t i = 0; i < n_batches; ++i)
    generator.forward(generator_input(generator, sampler, batch, rng), GeneratorNet::Mode::train);
  generator.end_bn_accumulation();
}

SynthesisResult synthesize(const GeneratorPosterior& posterior, GeneratorNet& generator,
                           const DataTransformer& transformer, const CondSampler& sampler,
                           const SynthesisOptions& options, Rng& rng) {
  if (options.samples < 1) throw UsageError("posterior sample count S must be >= 1");
  if (options.batch < 1) throw UsageError("synthesis batch must be >= 1");
  if (generator.arch().output_dim != transformer.layout().width)
    throw DataError("generator output width does not match the transformer layout");
  if (posterior.num_params() != generator.num_params())
    throw DataError(fmt::format("posterior has {} weights, generator has {}",
                                posterior.num_params(), generator.num_params()));

  SynthesisResult result;
  result.batches = (options.n_sample + options.batch - 1) / options.batch;
  const auto width = static_cast<Eigen::Index>(transformer.layout().width);
  const auto b = static_cast<Eigen::Index>(options.batch);
  result.encoded = MatrixXd::Zero(width, static_cast<Eigen::Index>(result.batches) * b);
  const double inv_s = 1.0 / static_cast<double>(options.samples);

  for (std::size_t t = 0; t < result.batches; ++t) {
    MatrixXd input = generator_input(generator, sampler, options.batch, rng);
    auto block = result.encoded.middleCols(static_cast<Eigen::Index>(t) * b, b);
    for (std::size_t s = 0; s < options.samples; ++s) {
      Eigen::VectorXd theta = sample_weights(posterior, rng);
      refresh_bn(generator, theta, sampler, options.bn_batches, options.batch, rng);
      MatrixXd logits = generator.forward(input, GeneratorNet::Mode::eval);
      block += inv_s * generator.activate(logits, rng);
    }
  }
  result.encoded.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(options.n_sample));
  for (const auto& col : transformer.schema()) result.table.header.push_back(col.name);
  result.table.rows.reserve(options.n_sample);
  for (std::size_t t = 0; t < result.batches; ++t) {
    const auto first = static_cast<Eigen::Index>(t) * b;
    const auto count = std::min<Eigen::Index>(b, result.encoded.cols() - first);
    try {
      auto part = transformer.decode_table(result.encoded.middleCols(first, count));
      for (auto& row : part.rows) result.table.rows.push_back(std::move(row));
    } catch (const DataError& e) {
      throw DataError(fmt::format("decode failed in batch {}: {}", t, e.what()));
    }
  }
  return result;
}

}  // namespace gactgan
