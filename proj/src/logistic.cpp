#include "gactgan/logistic.hpp"

#include <cmath>

#include "gactgan/error.hpp"

namespace gactgan {

using Eigen::MatrixXd;
using Eigen::VectorXd;

LogisticFit fit_logistic(const MatrixXd& design, const VectorXd& outcome, int max_iter,
                         double tol) {
  if (design.rows() != outcome.size()) throw DataError("logistic: design/outcome size mismatch");
  const auto p = design.cols();
  LogisticFit fit;
  fit.coef = VectorXd::Zero(p);
  double previous_deviance = std::numeric_limits<double>::infinity();
  MatrixXd xtwx;
  for (int iter = 1; iter <= max_iter; ++iter) {
    VectorXd eta = design * fit.coef;
    VectorXd mu = (1.0 + (-eta.array()).exp()).inverse().matrix();
    VectorXd w = (mu.array() * (1.0 - mu.array())).max(1e-12).matrix();
    VectorXd z = eta.array() + (outcome - mu).array() / w.array();
    xtwx = design.transpose() * w.asDiagonal() * design;
    Eigen::LDLT<MatrixXd> ldlt(xtwx);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return fit;
    VectorXd next = ldlt.solve(design.transpose() * (w.asDiagonal() * z));
    if (!next.allFinite()) return fit;
    fit.coef = next;
    fit.iterations = iter;

    VectorXd eta2 = design * fit.coef;
    double deviance = 0.0;
    for (Eigen::Index i = 0; i < eta2.size(); ++i) {
      // log(1 + e^x) computed stably
      double softplus = eta2[i] > 0 ? eta2[i] + std::log1p(std::exp(-eta2[i]))
                                    : std::log1p(std::exp(eta2[i]));
      deviance += 2.0 * (softplus - outcome[i] * eta2[i]);
    }
    if (std::abs(deviance - previous_deviance) < tol * (std::abs(deviance) + 0.1)) {
      fit.converged = true;
      break;
    }
    previous_deviance = deviance;
  }
  VectorXd eta = design * fit.coef;
  VectorXd mu = (1.0 + (-eta.array()).exp()).inverse().matrix();
  VectorXd w = (mu.array() * (1.0 - mu.array())).matrix();
  xtwx = design.transpose() * w.asDiagonal() * design;
  Eigen::LDLT<MatrixXd> ldlt(xtwx);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    fit.converged = false;
    return fit;
  }
  MatrixXd cov = ldlt.solve(MatrixXd::Identity(p, p));
  fit.std_err = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  if (!fit.std_err.allFinite()) fit.converged = false;
  return fit;
}

}  // namespace gactgan
