#include "gactgan/generator.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gactgan/error.hpp"

namespace gactgan {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::size_t GeneratorArch::num_params() const {
  std::size_t n = 0;
  std::size_t in = input_dim();
  for (auto h : hidden) {
    n += h * in + 3 * h;
    in += h;
  }
  return n + output_dim * in + output_dim;
}

nlohmann::json GeneratorArch::to_json() const {
  auto spans_j = nlohmann::json::array();
  for (const auto& s : spans)
    spans_j.push_back({s.offset, s.width, s.activation == SpanActivation::tanh ? "tanh" : "softmax"});
  return {{"noise_dim", noise_dim}, {"cond_dim", cond_dim}, {"hidden", hidden},
          {"output_dim", output_dim}, {"tau", tau}, {"spans", spans_j}};
}

GeneratorArch GeneratorArch::from_json(const nlohmann::json& j) {
  GeneratorArch a;
  a.noise_dim = j.at("noise_dim").get<std::size_t>();
  a.cond_dim = j.at("cond_dim").get<std::size_t>();
  a.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  a.output_dim = j.at("output_dim").get<std::size_t>();
  a.tau = j.at("tau").get<double>();
  for (const auto& s : j.at("spans")) {
    OutputSpan span;
    span.offset = s.at(0).get<std::size_t>();
    span.width = s.at(1).get<std::size_t>();
    span.activation = s.at(2).get<std::string>() == "tanh" ? SpanActivation::tanh
                                                           : SpanActivation::softmax;
    a.spans.push_back(span);
  }
  return a;
}

GeneratorArch make_generator_arch(const EncodedLayout& layout, std::size_t noise_dim,
                                  std::vector<std::size_t> hidden, double tau) {
  GeneratorArch a;
  a.noise_dim = noise_dim;
  a.cond_dim = layout.cond_width;
  a.hidden = std::move(hidden);
  a.spans = layout.output_spans();
  a.output_dim = layout.width;
  a.tau = tau;
  return a;
}

GeneratorNet::GeneratorNet(GeneratorArch arch) : arch_(std::move(arch)) {
  if (arch_.tau <= 0.0) throw UsageError("gumbel temperature must be positive");
  std::size_t offset = 0;
  std::size_t in = arch_.input_dim();
  for (auto h : arch_.hidden) {
    BlockOffsets b{in, h, 0, 0, 0, 0};
    b.weight = offset;
    offset += h * in;
    b.bias = offset;
    offset += h;
    b.gamma = offset;
    offset += h;
    b.beta = offset;
    offset += h;
    blocks_.push_back(b);
    running_mean_.push_back(VectorXd::Zero(h));
    running_var_.push_back(VectorXd::Ones(h));
    in += h;
  }
  head_in_ = in;
  head_weight_ = offset;
  offset += arch_.output_dim * in;
  head_bias_ = offset;
  offset += arch_.output_dim;
  params_ = VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

void GeneratorNet::set_params(const VectorXd& theta) {
  if (theta.size() != params_.size())
    throw DataError(fmt::format("generator expects {} parameters, got {}", params_.size(),
                                theta.size()));
  params_ = theta;
}

void GeneratorNet::initialize(Rng& rng) {
  auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = 0; i < count; ++i) params_[offset + i] = u(rng);
  };
  for (const auto& b : blocks_) {
    fill(b.weight, b.out * b.in, b.in);
    fill(b.bias, b.out, b.in);
    params_.segment(b.gamma, b.out).setOnes();
    params_.segment(b.beta, b.out).setZero();
  }
  fill(head_weight_, arch_.output_dim * head_in_, head_in_);
  fill(head_bias_, arch_.output_dim, head_in_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    running_mean_[i].setZero();
    running_var_[i].setOnes();
  }
}

MatrixXd GeneratorNet::forward(const MatrixXd& input, Mode mode, GeneratorCache* cache) {
  if (static_cast<std::size_t>(input.rows()) != arch_.input_dim())
    throw DataError(fmt::format("generator input has {} rows, expected {}", input.rows(),
                                arch_.input_dim()));
  const Eigen::Index batch = input.cols();
  if (cache) cache->blocks.resize(blocks_.size());
  MatrixXd x = input;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = blocks_[i];
    const auto out = static_cast<Eigen::Index>(b.out);
    Eigen::Map<const MatrixXd> w(params_.data() + b.weight, out, static_cast<Eigen::Index>(b.in));
    auto bias = params_.segment(b.bias, out);
    auto gamma = params_.segment(b.gamma, out);
    auto beta = params_.segment(b.beta, out);

    MatrixXd a = w * x;
    a.colwise() += bias;
    VectorXd mean, inv_std;
    if (mode == Mode::train) {
      mean = a.rowwise().mean();
      a.colwise() -= mean;
      VectorXd var = a.array().square().rowwise().mean();
      inv_std = (var.array() + kBnEps).rsqrt();
      double unbias = batch > 1 ? double(batch) / double(batch - 1) : 1.0;
      double m = kBnMomentum;
      if (accumulating_) m = 1.0 / static_cast<double>(accumulated_batches_ + 1);
      running_mean_[i] = (1.0 - m) * running_mean_[i] + m * mean;
      running_var_[i] = (1.0 - m) * running_var_[i] + m * (var * unbias);
    } else {
      a.colwise() -= running_mean_[i];
      inv_std = (running_var_[i].array() + kBnEps).rsqrt();
    }
    MatrixXd normalized = inv_std.asDiagonal() * a;
    MatrixXd bn_out = gamma.asDiagonal() * normalized;
    bn_out.colwise() += beta;

    MatrixXd next(out + x.rows(), batch);
    next.topRows(out) = bn_out.cwiseMax(0.0);
    next.bottomRows(x.rows()) = x;
    if (cache) {
      auto& c = cache->blocks[i];
      c.input = std::move(x);
      c.normalized = std::move(normalized);
      c.inv_std = std::move(inv_std);
      c.bn_out = std::move(bn_out);
    }
    x = std::move(next);
  }
  if (accumulating_ && mode == Mode::train) ++accumulated_batches_;

  const auto out_dim = static_cast<Eigen::Index>(arch_.output_dim);
  Eigen::Map<const MatrixXd> hw(params_.data() + head_weight_, out_dim,
                                static_cast<Eigen::Index>(head_in_));
  MatrixXd logits = hw * x;
  logits.colwise() += params_.segment(head_bias_, out_dim);
  if (cache) cache->head_input = std::move(x);
  return logits;
}

MatrixXd GeneratorNet::activate(const MatrixXd& logits, Rng& rng, GeneratorCache* cache) const {
  MatrixXd out(logits.rows(), logits.cols());
  std::exponential_distribution<double> expo(1.0);
  const double inv_tau = 1.0 / arch_.tau;
  std::vector<double> buf;
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    for (const auto& span : arch_.spans) {
      const auto off = static_cast<Eigen::Index>(span.offset);
      if (span.activation == SpanActivation::tanh) {
        for (std::size_t k = 0; k < span.width; ++k)
          out(off + k, c) = std::tanh(logits(off + k, c));
        continue;
      }
      buf.resize(span.width);
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < span.width; ++k) {
        double gumbel = -std::log(std::max(expo(rng), 1e-300));
        buf[k] = (logits(off + k, c) + gumbel) * inv_tau;
        mx = std::max(mx, buf[k]);
      }
      double s = 0.0;
      for (auto& v : buf) s += v = std::exp(v - mx);
      for (std::size_t k = 0; k < span.width; ++k) out(off + k, c) = buf[k] / s;
    }
  }
  if (cache) cache->activated = out;
  return out;
}

void GeneratorNet::backward(const GeneratorCache& cache, const MatrixXd& grad_activated,
                            const MatrixXd* grad_logits, VectorXd& grad) const {
  if (grad.size() != params_.size()) grad = VectorXd::Zero(params_.size());
  const auto& y = cache.activated;
  MatrixXd dl(y.rows(), y.cols());
  const double inv_tau = 1.0 / arch_.tau;
  for (const auto& span : arch_.spans) {
    const auto off = static_cast<Eigen::Index>(span.offset);
    const auto w = static_cast<Eigen::Index>(span.width);
    auto ys = y.middleRows(off, w);
    auto dys = grad_activated.middleRows(off, w);
    if (span.activation == SpanActivation::tanh) {
      dl.middleRows(off, w) = dys.array() * (1.0 - ys.array().square());
    } else {
      Eigen::RowVectorXd dot = (dys.array() * ys.array()).colwise().sum();
      dl.middleRows(off, w) =
          inv_tau * (ys.array() * (dys.array().rowwise() - dot.array()));
    }
  }
  if (grad_logits) dl += *grad_logits;

  const double batch = static_cast<double>(y.cols());
  const auto out_dim = static_cast<Eigen::Index>(arch_.output_dim);
  Eigen::Map<const MatrixXd> hw(params_.data() + head_weight_, out_dim,
                                static_cast<Eigen::Index>(head_in_));
  Eigen::Map<MatrixXd>(grad.data() + head_weight_, out_dim, static_cast<Eigen::Index>(head_in_))
      .noalias() += dl * cache.head_input.transpose();
  grad.segment(head_bias_, out_dim) += dl.rowwise().sum();
  MatrixXd dx = hw.transpose() * dl;

  for (std::size_t i = blocks_.size(); i-- > 0;) {
    const auto& b = blocks_[i];
    const auto& c = cache.blocks[i];
    const auto out = static_cast<Eigen::Index>(b.out);
    const auto in = static_cast<Eigen::Index>(b.in);
    MatrixXd dy = (c.bn_out.array() > 0.0).select(dx.topRows(out), 0.0);
    auto gamma = params_.segment(b.gamma, out);
    grad.segment(b.gamma, out) += (dy.array() * c.normalized.array()).rowwise().sum().matrix();
    grad.segment(b.beta, out) += dy.rowwise().sum();
    MatrixXd dxhat = gamma.asDiagonal() * dy;
    VectorXd sum_dxhat = dxhat.rowwise().sum();
    VectorXd sum_dxhat_xhat = (dxhat.array() * c.normalized.array()).rowwise().sum();
    MatrixXd da = batch * dxhat;
    da.colwise() -= sum_dxhat;
    da -= (c.normalized.array().colwise() * sum_dxhat_xhat.array()).matrix();
    da = (c.inv_std / batch).asDiagonal() * da;

    Eigen::Map<const MatrixXd> w(params_.data() + b.weight, out, in);
    Eigen::Map<MatrixXd>(grad.data() + b.weight, out, in).noalias() += da * c.input.transpose();
    grad.segment(b.bias, out) += da.rowwise().sum();
    MatrixXd dprev = dx.bottomRows(in);
    dprev.noalias() += w.transpose() * da;
    dx = std::move(dprev);
  }
}

void GeneratorNet::set_running_stats(std::vector<VectorXd> mean, std::vector<VectorXd> var) {
  if (mean.size() != blocks_.size() || var.size() != blocks_.size())
    throw DataError("running statistics do not match generator blocks");
  running_mean_ = std::move(mean);
  running_var_ = std::move(var);
}

void GeneratorNet::begin_bn_accumulation() {
  accumulating_ = true;
  accumulated_batches_ = 0;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    running_mean_[i].setZero();
    running_var_[i].setZero();
  }
}

void GeneratorNet::end_bn_accumulation() {
  accumulating_ = false;
  for (auto& v : running_var_) v = v.cwiseMax(kBnEps);
}

}  // namespace gactgan
