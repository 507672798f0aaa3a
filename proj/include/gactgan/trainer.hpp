#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gactgan/adam.hpp"
#include "gactgan/cond_sampler.hpp"
#include "gactgan/discriminator.hpp"
#include "gactgan/generator.hpp"
#include "gactgan/losses.hpp"
#include "gactgan/swag.hpp"
#include "gactgan/table.hpp"
#include "gactgan/transformer.hpp"

namespace gactgan {

struct TrainConfig {
  LossKind loss = LossKind::wasserstein;
  int epochs = 200;
  std::size_t batch_size = 500;
  std::size_t pac = 10;
  std::size_t noise_dim = 128;
  double learning_rate = 2e-4;
  double weight_decay = 1e-6;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double gumbel_temperature = 0.2;
  double gradient_penalty = 10.0;  // wasserstein only
  double weight_clip = 0.0;        // > 0 clamps critic weights after each step (wasserstein only)
  std::vector<std::size_t> generator_dims{256, 256};
  std::vector<std::size_t> discriminator_dims{256, 256};
  double dropout = 0.5;
  std::uint64_t seed = 0;

  /// Throws UsageError on invalid values (e.g. batch_size not divisible by pac).
  void validate() const;

  nlohmann::json to_json() const;
  /// Unknown keys are rejected; missing keys keep their defaults.
  static TrainConfig from_json(const nlohmann::json& j);
};

struct SwagSchedule {
  bool enabled = true;
  int t_collect = 50;  // collect after every epoch t > t_collect (1-based)
  std::size_t max_rank = 150;
};

struct EpochLog {
  int epoch = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double penalty = 0.0;
  double cross_entropy = 0.0;
};

/// Called with (epoch, θ_G) each time a SWAG snapshot is collected.
using SwagHook = std::function<void(int, const Eigen::VectorXd&)>;

struct TrainResult {
  GeneratorNet generator;
  DiscriminatorNet discriminator;
  SwagState swag;
  CondSampler cond_sampler;
  Adam generator_optimizer;
  Adam discriminator_optimizer;
  std::vector<EpochLog> log;
  Rng rng;
};

struct DiscriminatorStep {
  double loss = 0.0;     // including the penalty
  double penalty = 0.0;  // λ-scaled
  bool penalty_skipped = false;
  Eigen::VectorXd grad;
};

/// Critic loss and dθ_D on one batch. Consumes `rng` for dropout masks
/// (real pass, fake pass) and, for wasserstein, the penalty interpolation.
DiscriminatorStep discriminator_objective(LossKind loss, const DiscriminatorNet& critic,
                                          const Eigen::MatrixXd& real_packed,
                                          const Eigen::MatrixXd& fake_packed, double gp_lambda,
                                          Rng& rng);

struct GeneratorStep {
  double loss = 0.0;  // adversarial + cross-entropy
  double adversarial = 0.0;
  double cross_entropy = 0.0;
  Eigen::VectorXd grad;
};

/// Generator loss and dθ_G for one batch of noise (noise_dim × batch) and
/// conditions, backpropagating through the critic (held fixed).
GeneratorStep generator_objective(LossKind loss, GeneratorNet& generator,
                                  const DiscriminatorNet& critic, const Eigen::MatrixXd& noise,
                                  const CondBatch& cond, const EncodedLayout& layout, Rng& rng);

/// Stacks [encoded rows; condition vectors] and packs them for the critic.
Eigen::MatrixXd critic_input(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& cond,
                             std::size_t pac);

Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Alternating 1:1 critic/generator Adam updates for config.epochs epochs of
/// ⌈N/batch⌉ steps each. Fully deterministic given config.seed. Throws
/// NumericError naming the epoch and step when a loss becomes non-finite.
TrainResult train(const Table& data, const DataTransformer& transformer, const TrainConfig& config,
                  const SwagSchedule& swag, const SwagHook& hook = {});

}  // namespace gactgan
