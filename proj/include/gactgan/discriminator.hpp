#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gactgan/rng.hpp"

namespace gactgan {

struct DiscriminatorArch {
  std::size_t sample_dim = 0;  // encoded width + cond width
  std::size_t pac = 10;
  std::vector<std::size_t> hidden{256, 256};
  double dropout = 0.5;
  double leaky_slope = 0.2;

  std::size_t input_dim() const { return pac * sample_dim; }
  std::size_t num_params() const;

  nlohmann::json to_json() const;
  static DiscriminatorArch from_json(const nlohmann::json& j);
};

struct DiscriminatorCache {
  std::vector<Eigen::MatrixXd> inputs;  // input of each hidden layer, then of the head
  std::vector<Eigen::MatrixXd> slopes;  // leaky-ReLU derivative times dropout scale
};

/// Groups consecutive samples (columns) into pac-packed columns:
/// (d × n) -> (pac·d × n/pac). n must be divisible by pac.
Eigen::MatrixXd pack_samples(const Eigen::MatrixXd& samples, std::size_t pac);
Eigen::MatrixXd unpack_samples(const Eigen::MatrixXd& packed, std::size_t pac);

/// PacGAN critic: hidden layers Linear -> LeakyReLU(0.2) -> Dropout(0.5),
/// then a scalar affine head. Every hidden layer is piecewise linear in its
/// input, which is what lets the gradient penalty be differentiated
/// analytically with the activation pattern held fixed.
///
/// Parameter layout: per hidden layer W (out×in, column-major), b; then head
/// w (in), head bias.
class DiscriminatorNet {
 public:
  DiscriminatorNet() = default;
  explicit DiscriminatorNet(DiscriminatorArch arch);

  const DiscriminatorArch& arch() const { return arch_; }
  std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& mutable_params() { return params_; }
  void set_params(const Eigen::VectorXd& theta);
  void initialize(Rng& rng);

  /// Scores of packed inputs (one per column). Dropout masks are drawn from
  /// `rng` only when `training` is true.
  Eigen::RowVectorXd forward(const Eigen::MatrixXd& packed, bool training, Rng* rng,
                             DiscriminatorCache* cache = nullptr) const;

  /// Accumulates dL/dθ_D into `grad`; writes dL/d(input) when requested.
  void backward(const DiscriminatorCache& cache, const Eigen::RowVectorXd& grad_scores,
                Eigen::VectorXd* grad, Eigen::MatrixXd* grad_input) const;

  struct PenaltyResult {
    double value = 0.0;  // λ · mean (‖∇x̂ D‖ − 1)²
    bool skipped = false;
  };

  /// Gradient penalty on per-group interpolates x̂ = a·real + (1−a)·fake with
  /// a ~ U(0,1) per packed column. Adds dPenalty/dθ_D into `grad` when given.
  /// A non-finite penalty is skipped (value 0, skipped = true).
  PenaltyResult gradient_penalty(const Eigen::MatrixXd& real_packed,
                                 const Eigen::MatrixXd& fake_packed, double lambda, Rng& rng,
                                 Eigen::VectorXd* grad) const;

  /// ∇x D(x) per column with the activation pattern recorded in `cache`.
  Eigen::MatrixXd input_gradient(const DiscriminatorCache& cache) const;

 private:
  struct LayerOffsets {
    std::size_t in, out, weight, bias;
  };

  DiscriminatorArch arch_;
  std::vector<LayerOffsets> layers_;
  std::size_t head_in_ = 0, head_weight_ = 0, head_bias_ = 0;
  Eigen::VectorXd params_;
};

}  // namespace gactgan
