#include "gactgan/adam.hpp"

#include <cmath>

#include "gactgan/error.hpp"

namespace gactgan {

Adam::Adam(std::size_t num_params, AdamOptions options)
    : options_(options),
      m_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_params))),
      v_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_params))) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw DataError("Adam: parameter/gradient size mismatch");
  ++steps_;
  const auto& o = options_;
  params *= 1.0 - o.learning_rate * o.weight_decay;
  m_ = o.beta1 * m_ + (1.0 - o.beta1) * grad;
  v_ = o.beta2 * v_ + (1.0 - o.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(steps_));
  const double step_size = o.learning_rate / bc1;
  params.array() -= step_size * m_.array() / ((v_.array() / bc2).sqrt() + o.eps);
}

void Adam::restore(std::int64_t steps, Eigen::VectorXd m, Eigen::VectorXd v) {
  if (m.size() != m_.size() || v.size() != v_.size())
    throw DataError("Adam: restored state has the wrong size");
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace gactgan
