#include "gactgan/losses.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gactgan/error.hpp"

namespace gactgan {

std::string to_string(LossKind kind) {
  return kind == LossKind::vanilla ? "vanilla" : "wasserstein";
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "vanilla") return LossKind::vanilla;
  if (s == "wasserstein") return LossKind::wasserstein;
  throw UsageError(fmt::format("unknown loss '{}'", s));
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Sum of log(clamp(p)) (or log(1 − clamp(p)) when `complement`), with
// d/dlogit written to `grad` scaled by `scale`.
double clamped_log_prob(const Eigen::RowVectorXd& logits, bool complement, double scale,
                        Eigen::RowVectorXd* grad) {
  double total = 0.0;
  if (grad) grad->resize(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    double p = sigmoid(logits[i]);
    bool clamped = p < kProbFloor || p > 1.0 - kProbFloor;
    double pc = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
    total += complement ? std::log(1.0 - pc) : std::log(pc);
    if (grad) {
      // d log p / dl = 1 − p;  d log(1 − p) / dl = −p
      double d = clamped ? 0.0 : (complement ? -p : 1.0 - p);
      (*grad)[i] = scale * d;
    }
  }
  return total;
}

}  // namespace

double vanilla_discriminator_loss(const Eigen::RowVectorXd& real_logits,
                                  const Eigen::RowVectorXd& fake_logits,
                                  Eigen::RowVectorXd* grad_real, Eigen::RowVectorXd* grad_fake) {
  const double nr = static_cast<double>(real_logits.size());
  const double nf = static_cast<double>(fake_logits.size());
  double lr = clamped_log_prob(real_logits, false, -1.0 / nr, grad_real);
  double lf = clamped_log_prob(fake_logits, true, -1.0 / nf, grad_fake);
  return -(lr / nr + lf / nf);
}

double vanilla_generator_loss(const Eigen::RowVectorXd& fake_logits, Eigen::RowVectorXd* grad_fake) {
  const double n = static_cast<double>(fake_logits.size());
  return -clamped_log_prob(fake_logits, false, -1.0 / n, grad_fake) / n;
}

double wasserstein_discriminator_loss(const Eigen::RowVectorXd& real_scores,
                                      const Eigen::RowVectorXd& fake_scores,
                                      Eigen::RowVectorXd* grad_real,
                                      Eigen::RowVectorXd* grad_fake) {
  if (grad_real)
    *grad_real = Eigen::RowVectorXd::Constant(real_scores.size(), -1.0 / double(real_scores.size()));
  if (grad_fake)
    *grad_fake = Eigen::RowVectorXd::Constant(fake_scores.size(), 1.0 / double(fake_scores.size()));
  return fake_scores.mean() - real_scores.mean();
}

double wasserstein_generator_loss(const Eigen::RowVectorXd& fake_scores,
                                  Eigen::RowVectorXd* grad_fake) {
  if (grad_fake)
    *grad_fake = Eigen::RowVectorXd::Constant(fake_scores.size(), -1.0 / double(fake_scores.size()));
  return -fake_scores.mean();
}

double conditional_cross_entropy(const Eigen::MatrixXd& logits, const CondBatch& cond,
                                 const EncodedLayout& layout, Eigen::MatrixXd* grad) {
  if (grad) *grad = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  if (cond.size() == 0) return 0.0;
  if (static_cast<Eigen::Index>(cond.size()) != logits.cols())
    throw DataError("condition batch does not match generator batch");
  auto cats = layout.categorical_blocks();
  const double n = static_cast<double>(cond.size());
  double total = 0.0;
  for (std::size_t i = 0; i < cond.size(); ++i) {
    if (cond.column[i] < 0) continue;
    const auto& b = layout.blocks[cats[static_cast<std::size_t>(cond.column[i])]];
    const auto off = static_cast<Eigen::Index>(b.span_offset);
    const auto w = static_cast<Eigen::Index>(b.span_width);
    const auto col = static_cast<Eigen::Index>(i);
    auto span = logits.col(col).segment(off, w);
    double mx = span.maxCoeff();
    double lse = mx + std::log((span.array() - mx).exp().sum());
    total += lse - span[static_cast<Eigen::Index>(cond.category[i])];
    if (grad) {
      auto g = grad->col(col).segment(off, w);
      g = (span.array() - lse).exp().matrix() / n;
      g[static_cast<Eigen::Index>(cond.category[i])] -= 1.0 / n;
    }
  }
  return total / n;
}

LossPair vanilla_losses(const Eigen::RowVectorXd& real_logits, const Eigen::RowVectorXd& fake_logits,
                        double cross_entropy) {
  return {vanilla_discriminator_loss(real_logits, fake_logits),
          vanilla_generator_loss(fake_logits) + cross_entropy};
}

LossPair wasserstein_losses(const Eigen::RowVectorXd& real_scores,
                            const Eigen::RowVectorXd& fake_scores, double penalty,
                            double cross_entropy) {
  return {wasserstein_discriminator_loss(real_scores, fake_scores) + penalty,
          wasserstein_generator_loss(fake_scores) + cross_entropy};
}

}  // namespace gactgan
