#include "gactgan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "gactgan/error.hpp"

namespace gactgan {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

void TrainConfig::validate() const {
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (batch_size < 1 || pac < 1) throw UsageError("batch_size and pac must be >= 1");
  if (batch_size % pac != 0)
    throw UsageError(fmt::format("batch_size {} is not divisible by pac {}", batch_size, pac));
  if (noise_dim < 1) throw UsageError("noise_dim must be >= 1");
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (weight_decay < 0.0) throw UsageError("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw UsageError("adam betas must lie in [0,1)");
  if (!(gumbel_temperature > 0.0)) throw UsageError("gumbel_temperature must be positive");
  if (gradient_penalty < 0.0 || weight_clip < 0.0)
    throw UsageError("gradient_penalty and weight_clip must be >= 0");
  if (dropout < 0.0 || dropout >= 1.0) throw UsageError("dropout must be in [0,1)");
  for (auto d : generator_dims)
    if (d < 1) throw UsageError("generator_dims entries must be >= 1");
  if (discriminator_dims.empty()) throw UsageError("discriminator needs a hidden layer");
  for (auto d : discriminator_dims)
    if (d < 1) throw UsageError("discriminator_dims entries must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"loss", to_string(loss)},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"pac", pac},
          {"noise_dim", noise_dim},
          {"learning_rate", learning_rate},
          {"weight_decay", weight_decay},
          {"adam_betas", {beta1, beta2}},
          {"gumbel_temperature", gumbel_temperature},
          {"gradient_penalty", gradient_penalty},
          {"weight_clip", weight_clip},
          {"generator_dims", generator_dims},
          {"discriminator_dims", discriminator_dims},
          {"dropout", dropout},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{
      "loss", "epochs", "batch_size", "pac", "noise_dim", "learning_rate", "weight_decay",
      "adam_betas", "gumbel_temperature", "gradient_penalty", "weight_clip", "generator_dims",
      "discriminator_dims", "dropout", "seed"};
  if (!j.is_object()) throw UsageError("train config must be an object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw UsageError(fmt::format("unknown train config key '{}'", key));
  TrainConfig c;
  try {
    if (j.contains("loss")) c.loss = loss_kind_from_string(j["loss"].get<std::string>());
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("pac")) c.pac = j["pac"].get<std::size_t>();
    if (j.contains("noise_dim")) c.noise_dim = j["noise_dim"].get<std::size_t>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("weight_decay")) c.weight_decay = j["weight_decay"].get<double>();
    if (j.contains("adam_betas")) {
      auto b = j["adam_betas"].get<std::vector<double>>();
      if (b.size() != 2) throw UsageError("adam_betas needs two values");
      c.beta1 = b[0];
      c.beta2 = b[1];
    }
    if (j.contains("gumbel_temperature")) c.gumbel_temperature = j["gumbel_temperature"].get<double>();
    if (j.contains("gradient_penalty")) c.gradient_penalty = j["gradient_penalty"].get<double>();
    if (j.contains("weight_clip")) c.weight_clip = j["weight_clip"].get<double>();
    if (j.contains("generator_dims"))
      c.generator_dims = j["generator_dims"].get<std::vector<std::size_t>>();
    if (j.contains("discriminator_dims"))
      c.discriminator_dims = j["discriminator_dims"].get<std::vector<std::size_t>>();
    if (j.contains("dropout")) c.dropout = j["dropout"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(fmt::format("train config: {}", e.what()));
  }
  c.validate();
  return c;
}

MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
  return m;
}

MatrixXd critic_input(const MatrixXd& rows, const MatrixXd& cond, std::size_t pac) {
  MatrixXd stacked(rows.rows() + cond.rows(), rows.cols());
  stacked.topRows(rows.rows()) = rows;
  if (cond.rows() > 0) stacked.bottomRows(cond.rows()) = cond;
  return pack_samples(stacked, pac);
}

DiscriminatorStep discriminator_objective(LossKind loss, const DiscriminatorNet& critic,
                                          const MatrixXd& real_packed, const MatrixXd& fake_packed,
                                          double gp_lambda, Rng& rng) {
  DiscriminatorStep step;
  step.grad = VectorXd::Zero(static_cast<Eigen::Index>(critic.num_params()));
  DiscriminatorCache real_cache, fake_cache;
  RowVectorXd real_scores = critic.forward(real_packed, true, &rng, &real_cache);
  RowVectorXd fake_scores = critic.forward(fake_packed, true, &rng, &fake_cache);
  RowVectorXd d_real, d_fake;
  if (loss == LossKind::vanilla) {
    step.loss = vanilla_discriminator_loss(real_scores, fake_scores, &d_real, &d_fake);
  } else {
    step.loss = wasserstein_discriminator_loss(real_scores, fake_scores, &d_real, &d_fake);
  }
  critic.backward(real_cache, d_real, &step.grad, nullptr);
  critic.backward(fake_cache, d_fake, &step.grad, nullptr);
  if (loss == LossKind::wasserstein && gp_lambda > 0.0) {
    auto gp = critic.gradient_penalty(real_packed, fake_packed, gp_lambda, rng, &step.grad);
    step.penalty = gp.value;
    step.penalty_skipped = gp.skipped;
    step.loss += gp.value;
  }
  return step;
}

GeneratorStep generator_objective(LossKind loss, GeneratorNet& generator,
                                  const DiscriminatorNet& critic, const MatrixXd& noise,
                                  const CondBatch& cond, const EncodedLayout& layout, Rng& rng) {
  const auto batch = noise.cols();
  MatrixXd input(noise.rows() + cond.vectors.rows(), batch);
  input.topRows(noise.rows()) = noise;
  if (cond.vectors.rows() > 0) input.bottomRows(cond.vectors.rows()) = cond.vectors;

  GeneratorCache cache;
  MatrixXd logits = generator.forward(input, GeneratorNet::Mode::train, &cache);
  MatrixXd fake = generator.activate(logits, rng, &cache);

  const std::size_t pac = critic.arch().pac;
  DiscriminatorCache dcache;
  RowVectorXd scores = critic.forward(critic_input(fake, cond.vectors, pac), true, &rng, &dcache);
  RowVectorXd d_scores;
  GeneratorStep step;
  step.adversarial = loss == LossKind::vanilla ? vanilla_generator_loss(scores, &d_scores)
                                               : wasserstein_generator_loss(scores, &d_scores);
  MatrixXd d_packed;
  critic.backward(dcache, d_scores, nullptr, &d_packed);
  MatrixXd d_stacked = unpack_samples(d_packed, pac);
  MatrixXd d_fake = d_stacked.topRows(fake.rows());

  MatrixXd d_logits;
  step.cross_entropy = conditional_cross_entropy(logits, cond, layout, &d_logits);
  step.loss = step.adversarial + step.cross_entropy;
  step.grad = VectorXd::Zero(static_cast<Eigen::Index>(generator.num_params()));
  generator.backward(cache, d_fake, &d_logits, step.grad);
  return step;
}

TrainResult train(const Table& data, const DataTransformer& transformer, const TrainConfig& config,
                  const SwagSchedule& swag, const SwagHook& hook) {
  config.validate();
  if (data.rows.empty()) throw DataError("training table is empty");
  Rng encode_rng(child_seed(config.seed, {1}));
  Rng init_rng(child_seed(config.seed, {2}));
  Rng rng(child_seed(config.seed, {3}));

  const auto& layout = transformer.layout();
  const MatrixXd encoded = transformer.encode_table(data, encode_rng);

  DiscriminatorArch darch;
  darch.sample_dim = layout.width + layout.cond_width;
  darch.pac = config.pac;
  darch.hidden = config.discriminator_dims;
  darch.dropout = config.dropout;

  TrainResult result{
      GeneratorNet(make_generator_arch(layout, config.noise_dim, config.generator_dims,
                                       config.gumbel_temperature)),
      DiscriminatorNet(darch),
      SwagState(),
      CondSampler(layout, encoded),
      Adam(),
      Adam(),
      {},
      Rng()};
  auto& gen = result.generator;
  auto& critic = result.discriminator;
  gen.initialize(init_rng);
  critic.initialize(init_rng);
  if (swag.enabled) result.swag = SwagState(gen.num_params(), swag.max_rank);

  AdamOptions opt{config.learning_rate, config.beta1, config.beta2, 1e-8, config.weight_decay};
  result.generator_optimizer = Adam(gen.num_params(), opt);
  result.discriminator_optimizer = Adam(critic.num_params(), opt);

  const auto batch = static_cast<Eigen::Index>(config.batch_size);
  const auto noise_dim = static_cast<Eigen::Index>(config.noise_dim);
  const std::size_t n = data.rows.size();
  const std::size_t steps = (n + config.batch_size - 1) / config.batch_size;
  const double gp_lambda = config.loss == LossKind::wasserstein ? config.gradient_penalty : 0.0;
  const auto& sampler = result.cond_sampler;

  std::vector<std::size_t> perm(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    for (std::size_t s = 0; s < steps; ++s) {
      // Critic update.
      MatrixXd noise = standard_normal(noise_dim, batch, rng);
      CondBatch cond = sampler.sample_train(config.batch_size, rng);
      MatrixXd gen_in(noise_dim + cond.vectors.rows(), batch);
      gen_in.topRows(noise_dim) = noise;
      if (cond.vectors.rows() > 0) gen_in.bottomRows(cond.vectors.rows()) = cond.vectors;
      MatrixXd fake = gen.activate(gen.forward(gen_in, GeneratorNet::Mode::train), rng);

      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      MatrixXd real(encoded.rows(), batch), real_cond(cond.vectors.rows(), batch);
      for (Eigen::Index i = 0; i < batch; ++i) {
        const auto p = perm[static_cast<std::size_t>(i)];
        real.col(i) = encoded.col(static_cast<Eigen::Index>(cond.real_rows[p]));
        if (real_cond.rows() > 0) real_cond.col(i) = cond.vectors.col(static_cast<Eigen::Index>(p));
      }
      auto d_step = discriminator_objective(config.loss, critic,
                                            critic_input(real, real_cond, config.pac),
                                            critic_input(fake, cond.vectors, config.pac),
                                            gp_lambda, rng);
      if (d_step.penalty_skipped)
        fmt::print(stderr, "warning: epoch {} step {}: non-finite gradient penalty skipped\n",
                   epoch, s + 1);
      if (!std::isfinite(d_step.loss) || !d_step.grad.allFinite())
        throw NumericError(fmt::format("non-finite critic loss at epoch {} step {}", epoch, s + 1));
      result.discriminator_optimizer.step(critic.mutable_params(), d_step.grad);
      if (config.loss == LossKind::wasserstein && config.weight_clip > 0.0)
        critic.mutable_params() =
            critic.params().cwiseMax(-config.weight_clip).cwiseMin(config.weight_clip);

      // Generator update.
      MatrixXd g_noise = standard_normal(noise_dim, batch, rng);
      CondBatch g_cond = sampler.sample_train(config.batch_size, rng);
      auto g_step = generator_objective(config.loss, gen, critic, g_noise, g_cond, layout, rng);
      if (!std::isfinite(g_step.loss) || !g_step.grad.allFinite())
        throw NumericError(
            fmt::format("non-finite generator loss at epoch {} step {}", epoch, s + 1));
      result.generator_optimizer.step(gen.mutable_params(), g_step.grad);

      log.d_loss += d_step.loss;
      log.g_loss += g_step.loss;
      log.penalty += d_step.penalty;
      log.cross_entropy += g_step.cross_entropy;
    }
    const double ds = static_cast<double>(steps);
    log.d_loss /= ds;
    log.g_loss /= ds;
    log.penalty /= ds;
    log.cross_entropy /= ds;
    result.log.push_back(log);

    if (swag.enabled && epoch > swag.t_collect) {
      result.swag.collect(gen.params());
      if (hook) hook(epoch, gen.params());
    }
  }
  result.rng = rng;
  return result;
}

}  // namespace gactgan
