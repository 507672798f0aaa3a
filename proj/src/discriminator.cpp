#include "gactgan/discriminator.hpp"

#include <cmath>

#include <fmt/format.h>

#include "gactgan/error.hpp"

namespace gactgan {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

std::size_t DiscriminatorArch::num_params() const {
  std::size_t n = 0;
  std::size_t in = input_dim();
  for (auto h : hidden) {
    n += h * in + h;
    in = h;
  }
  return n + in + 1;
}

nlohmann::json DiscriminatorArch::to_json() const {
  return {{"sample_dim", sample_dim}, {"pac", pac}, {"hidden", hidden},
          {"dropout", dropout}, {"leaky_slope", leaky_slope}};
}

DiscriminatorArch DiscriminatorArch::from_json(const nlohmann::json& j) {
  DiscriminatorArch a;
  a.sample_dim = j.at("sample_dim").get<std::size_t>();
  a.pac = j.at("pac").get<std::size_t>();
  a.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  a.dropout = j.at("dropout").get<double>();
  a.leaky_slope = j.at("leaky_slope").get<double>();
  return a;
}

MatrixXd pack_samples(const MatrixXd& samples, std::size_t pac) {
  if (pac == 0 || samples.cols() % static_cast<Eigen::Index>(pac) != 0)
    throw DataError(fmt::format("{} samples cannot be packed in groups of {}", samples.cols(), pac));
  const auto p = static_cast<Eigen::Index>(pac);
  return Eigen::Map<const MatrixXd>(samples.data(), samples.rows() * p, samples.cols() / p);
}

MatrixXd unpack_samples(const MatrixXd& packed, std::size_t pac) {
  const auto p = static_cast<Eigen::Index>(pac);
  return Eigen::Map<const MatrixXd>(packed.data(), packed.rows() / p, packed.cols() * p);
}

DiscriminatorNet::DiscriminatorNet(DiscriminatorArch arch) : arch_(std::move(arch)) {
  if (arch_.pac == 0) throw UsageError("pac must be >= 1");
  if (arch_.dropout < 0.0 || arch_.dropout >= 1.0) throw UsageError("dropout must be in [0,1)");
  std::size_t offset = 0;
  std::size_t in = arch_.input_dim();
  for (auto h : arch_.hidden) {
    layers_.push_back({in, h, offset, offset + h * in});
    offset += h * in + h;
    in = h;
  }
  head_in_ = in;
  head_weight_ = offset;
  head_bias_ = offset + in;
  params_ = VectorXd::Zero(static_cast<Eigen::Index>(offset + in + 1));
}

void DiscriminatorNet::set_params(const VectorXd& theta) {
  if (theta.size() != params_.size())
    throw DataError(fmt::format("discriminator expects {} parameters, got {}", params_.size(),
                                theta.size()));
  params_ = theta;
}

void DiscriminatorNet::initialize(Rng& rng) {
  auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = 0; i < count; ++i) params_[offset + i] = u(rng);
  };
  for (const auto& l : layers_) {
    fill(l.weight, l.out * l.in, l.in);
    fill(l.bias, l.out, l.in);
  }
  fill(head_weight_, head_in_, head_in_);
  fill(head_bias_, 1, head_in_);
}

RowVectorXd DiscriminatorNet::forward(const MatrixXd& packed, bool training, Rng* rng,
                                      DiscriminatorCache* cache) const {
  if (static_cast<std::size_t>(packed.rows()) != arch_.input_dim())
    throw DataError(fmt::format("discriminator input has {} rows, expected {}", packed.rows(),
                                arch_.input_dim()));
  if (training && arch_.dropout > 0.0 && !rng)
    throw UsageError("training-mode discriminator needs a random source for dropout");
  if (cache) {
    cache->inputs.clear();
    cache->slopes.clear();
  }
  std::bernoulli_distribution keep(1.0 - arch_.dropout);
  const double scale = 1.0 / (1.0 - arch_.dropout);
  MatrixXd x = packed;
  for (const auto& l : layers_) {
    const auto out = static_cast<Eigen::Index>(l.out);
    Eigen::Map<const MatrixXd> w(params_.data() + l.weight, out, static_cast<Eigen::Index>(l.in));
    MatrixXd h = w * x;
    h.colwise() += params_.segment(l.bias, out);
    MatrixXd slope = (h.array() > 0.0).select(MatrixXd::Ones(h.rows(), h.cols()), arch_.leaky_slope);
    if (training && arch_.dropout > 0.0) {
      for (Eigen::Index c = 0; c < slope.cols(); ++c)
        for (Eigen::Index r = 0; r < slope.rows(); ++r)
          slope(r, c) *= keep(*rng) ? scale : 0.0;
    }
    MatrixXd next = h.cwiseProduct(slope);
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->slopes.push_back(std::move(slope));
    }
    x = std::move(next);
  }
  Eigen::Map<const VectorXd> hw(params_.data() + head_weight_, static_cast<Eigen::Index>(head_in_));
  RowVectorXd scores = hw.transpose() * x;
  scores.array() += params_[head_bias_];
  if (cache) cache->inputs.push_back(std::move(x));
  return scores;
}

void DiscriminatorNet::backward(const DiscriminatorCache& cache, const RowVectorXd& grad_scores,
                                VectorXd* grad, MatrixXd* grad_input) const {
  if (grad && grad->size() != params_.size()) *grad = VectorXd::Zero(params_.size());
  const auto head_in = static_cast<Eigen::Index>(head_in_);
  Eigen::Map<const VectorXd> hw(params_.data() + head_weight_, head_in);
  if (grad) {
    grad->segment(head_weight_, head_in).noalias() += cache.inputs.back() * grad_scores.transpose();
    (*grad)[head_bias_] += grad_scores.sum();
  }
  MatrixXd dx = hw * grad_scores;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const auto& l = layers_[i];
    const auto out = static_cast<Eigen::Index>(l.out);
    const auto in = static_cast<Eigen::Index>(l.in);
    MatrixXd dh = dx.cwiseProduct(cache.slopes[i]);
    if (grad) {
      Eigen::Map<MatrixXd>(grad->data() + l.weight, out, in).noalias() +=
          dh * cache.inputs[i].transpose();
      grad->segment(l.bias, out) += dh.rowwise().sum();
    }
    if (i == 0 && !grad_input) break;
    Eigen::Map<const MatrixXd> w(params_.data() + l.weight, out, in);
    dx.noalias() = w.transpose() * dh;
  }
  if (grad_input) *grad_input = std::move(dx);
}

MatrixXd DiscriminatorNet::input_gradient(const DiscriminatorCache& cache) const {
  const auto cols = cache.inputs.front().cols();
  MatrixXd g;
  backward(cache, RowVectorXd::Ones(cols), nullptr, &g);
  return g;
}

DiscriminatorNet::PenaltyResult DiscriminatorNet::gradient_penalty(const MatrixXd& real_packed,
                                                                   const MatrixXd& fake_packed,
                                                                   double lambda, Rng& rng,
                                                                   VectorXd* grad) const {
  if (real_packed.rows() != fake_packed.rows() || real_packed.cols() != fake_packed.cols())
    throw DataError("gradient penalty needs aligned real and fake batches");
  const Eigen::Index groups = real_packed.cols();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MatrixXd interp(real_packed.rows(), groups);
  for (Eigen::Index c = 0; c < groups; ++c) {
    double a = unif(rng);
    interp.col(c) = a * real_packed.col(c) + (1.0 - a) * fake_packed.col(c);
  }
  DiscriminatorCache cache;
  forward(interp, true, &rng, &cache);

  // v_L = w_head for every column; u_l = s_l ⊙ v_{l+1}; v_l = W_lᵀ u_l.
  const std::size_t depth = layers_.size();
  const auto head_in = static_cast<Eigen::Index>(head_in_);
  Eigen::Map<const VectorXd> hw(params_.data() + head_weight_, head_in);
  std::vector<MatrixXd> u(depth);
  MatrixXd v = hw.replicate(1, groups);
  for (std::size_t l = depth; l-- > 0;) {
    const auto& lay = layers_[l];
    Eigen::Map<const MatrixXd> w(params_.data() + lay.weight, static_cast<Eigen::Index>(lay.out),
                                 static_cast<Eigen::Index>(lay.in));
    u[l] = cache.slopes[l].cwiseProduct(v);
    v = w.transpose() * u[l];
  }
  RowVectorXd norms = v.colwise().norm();
  double penalty = lambda * (norms.array() - 1.0).square().mean();
  PenaltyResult result;
  if (!std::isfinite(penalty)) {
    result.skipped = true;
    return result;
  }
  result.value = penalty;
  if (!grad) return result;
  if (grad->size() != params_.size()) *grad = VectorXd::Zero(params_.size());

  // dP/dv_0 per column, then unwind the recursion.
  MatrixXd dv(v.rows(), groups);
  const double coeff = 2.0 * lambda / static_cast<double>(groups);
  for (Eigen::Index c = 0; c < groups; ++c)
    if (norms[c] > 0.0)
      dv.col(c) = (coeff * (norms[c] - 1.0) / norms[c]) * v.col(c);
    else
      dv.col(c).setZero();
  for (std::size_t l = 0; l < depth; ++l) {
    const auto& lay = layers_[l];
    const auto out = static_cast<Eigen::Index>(lay.out);
    const auto in = static_cast<Eigen::Index>(lay.in);
    Eigen::Map<const MatrixXd> w(params_.data() + lay.weight, out, in);
    Eigen::Map<MatrixXd>(grad->data() + lay.weight, out, in).noalias() += u[l] * dv.transpose();
    MatrixXd du = w * dv;
    dv = cache.slopes[l].cwiseProduct(du);
  }
  grad->segment(head_weight_, head_in) += dv.rowwise().sum();
  return result;
}

}  // namespace gactgan
