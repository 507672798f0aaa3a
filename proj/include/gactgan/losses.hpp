#pragma once

#include <string>

#include <Eigen/Dense>

#include "gactgan/cond_sampler.hpp"
#include "gactgan/transformer.hpp"

namespace gactgan {

enum class LossKind { vanilla, wasserstein };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& s);

struct LossPair {
  double d_loss = 0.0;
  double g_loss = 0.0;
};

/// Probabilities σ(logit) are clamped to [kProbFloor, 1 − kProbFloor];
/// the gradient is zero where the clamp is active.
inline constexpr double kProbFloor = 1e-7;

/// −(mean log D(real) + mean log(1 − D(fake))) on critic logits.
double vanilla_discriminator_loss(const Eigen::RowVectorXd& real_logits,
                                  const Eigen::RowVectorXd& fake_logits,
                                  Eigen::RowVectorXd* grad_real = nullptr,
                                  Eigen::RowVectorXd* grad_fake = nullptr);
/// Non-saturating generator loss −mean log D(fake).
double vanilla_generator_loss(const Eigen::RowVectorXd& fake_logits,
                              Eigen::RowVectorXd* grad_fake = nullptr);

/// mean D(fake) − mean D(real), without the penalty term.
double wasserstein_discriminator_loss(const Eigen::RowVectorXd& real_scores,
                                      const Eigen::RowVectorXd& fake_scores,
                                      Eigen::RowVectorXd* grad_real = nullptr,
                                      Eigen::RowVectorXd* grad_fake = nullptr);
double wasserstein_generator_loss(const Eigen::RowVectorXd& fake_scores,
                                  Eigen::RowVectorXd* grad_fake = nullptr);

/// Mean cross-entropy between the generator's raw logits on each item's
/// conditioned categorical span and the conditioned category. Zero for an
/// unconditional batch.
double conditional_cross_entropy(const Eigen::MatrixXd& logits, const CondBatch& cond,
                                 const EncodedLayout& layout, Eigen::MatrixXd* grad = nullptr);

/// Both losses from critic outputs. `cross_entropy` is added to the
/// generator side; `penalty` (already scaled by λ) to the critic side.
LossPair vanilla_losses(const Eigen::RowVectorXd& real_logits, const Eigen::RowVectorXd& fake_logits,
                        double cross_entropy);
LossPair wasserstein_losses(const Eigen::RowVectorXd& real_scores,
                            const Eigen::RowVectorXd& fake_scores, double penalty,
                            double cross_entropy);

}  // namespace gactgan
