#pragma once

#include <cstdint>

#include <Eigen/Dense>
#include <json.hpp>

namespace gactgan {

struct AdamOptions {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;
  double weight_decay = 1e-6;
};

/// Adam with decoupled weight decay: θ ← θ·(1 − lr·wd) before the moment
/// step, so a zero gradient shrinks parameters by exactly that factor.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t num_params, AdamOptions options);

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

  std::int64_t steps() const { return steps_; }
  const AdamOptions& options() const { return options_; }
  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }
  void restore(std::int64_t steps, Eigen::VectorXd m, Eigen::VectorXd v);

 private:
  AdamOptions options_;
  Eigen::VectorXd m_, v_;
  std::int64_t steps_ = 0;
};

}  // namespace gactgan
