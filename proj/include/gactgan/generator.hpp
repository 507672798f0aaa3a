#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gactgan/rng.hpp"
#include "gactgan/transformer.hpp"

namespace gactgan {

struct GeneratorArch {
  std::size_t noise_dim = 128;
  std::size_t cond_dim = 0;
  std::vector<std::size_t> hidden{256, 256};
  std::vector<OutputSpan> spans;  // output activations, covering [0, output_dim)
  std::size_t output_dim = 0;
  double tau = 0.2;  // gumbel-softmax temperature

  std::size_t input_dim() const { return noise_dim + cond_dim; }
  std::size_t num_params() const;

  nlohmann::json to_json() const;
  static GeneratorArch from_json(const nlohmann::json& j);
};

GeneratorArch make_generator_arch(const EncodedLayout& layout, std::size_t noise_dim,
                                  std::vector<std::size_t> hidden, double tau);

/// Saved activations of a training-mode forward pass.
struct GeneratorCache {
  struct Block {
    Eigen::MatrixXd input;
    Eigen::MatrixXd normalized;  // batch-normalised pre-activation
    Eigen::VectorXd inv_std;
    Eigen::MatrixXd bn_out;      // gamma * normalized + beta
  };
  std::vector<Block> blocks;
  Eigen::MatrixXd head_input;
  Eigen::MatrixXd activated;
};

/// Residual MLP generator. Each hidden block is
///   h = ReLU(BN(W x + b)),  out = [h; x]
/// followed by an affine head and per-span activations (tanh on scalar
/// slots, gumbel-softmax on one-hot spans).
///
/// Parameter layout of the flat vector θ_G, in order: for every hidden block
/// W (out×in, column-major), b, BN gamma, BN beta; then head W, head b.
/// BN running statistics are buffers, not parameters.
class GeneratorNet {
 public:
  enum class Mode { train, eval };

  GeneratorNet() = default;
  explicit GeneratorNet(GeneratorArch arch);

  const GeneratorArch& arch() const { return arch_; }
  std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& mutable_params() { return params_; }
  void set_params(const Eigen::VectorXd& theta);

  /// PyTorch-style init: affine weights and biases U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
  /// gamma = 1, beta = 0.
  void initialize(Rng& rng);

  /// Raw head output (output_dim × batch). Training mode normalises with
  /// batch statistics and updates the running statistics.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Mode mode, GeneratorCache* cache = nullptr);

  /// Applies the span activations; gumbel noise is drawn from `rng`.
  Eigen::MatrixXd activate(const Eigen::MatrixXd& logits, Rng& rng,
                           GeneratorCache* cache = nullptr) const;

  /// Accumulates dL/dθ into `grad` given dL/d(activated) and, optionally,
  /// an extra gradient taken directly w.r.t. the raw head output.
  void backward(const GeneratorCache& cache, const Eigen::MatrixXd& grad_activated,
                const Eigen::MatrixXd* grad_logits, Eigen::VectorXd& grad) const;

  /// Running BN statistics per hidden block.
  const std::vector<Eigen::VectorXd>& running_mean() const { return running_mean_; }
  const std::vector<Eigen::VectorXd>& running_var() const { return running_var_; }
  void set_running_stats(std::vector<Eigen::VectorXd> mean, std::vector<Eigen::VectorXd> var);

  /// Switches running-statistic updates to a cumulative average over the
  /// following training-mode passes; end_bn_accumulation floors the
  /// variances and restores momentum updates.
  void begin_bn_accumulation();
  void end_bn_accumulation();

  static constexpr double kBnEps = 1e-5;
  static constexpr double kBnMomentum = 0.1;

 private:
  struct BlockOffsets {
    std::size_t in, out, weight, bias, gamma, beta;
  };

  GeneratorArch arch_;
  std::vector<BlockOffsets> blocks_;
  std::size_t head_in_ = 0, head_weight_ = 0, head_bias_ = 0;
  Eigen::VectorXd params_;
  std::vector<Eigen::VectorXd> running_mean_, running_var_;
  bool accumulating_ = false;
  std::size_t accumulated_batches_ = 0;
};

}  // namespace gactgan
