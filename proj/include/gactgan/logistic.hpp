#pragma once

#include <vector>

#include <Eigen/Dense>

namespace gactgan {

struct LogisticFit {
  Eigen::VectorXd coef;
  Eigen::VectorXd std_err;
  bool converged = false;
  int iterations = 0;
};

/// Logistic regression by iteratively reweighted least squares. `design`
/// is n × p and should carry its own intercept column. Standard errors are
/// the square roots of diag((XᵀWX)⁻¹) at the solution. converged is false
/// when the deviance has not settled within `max_iter` iterations or the
/// normal equations become singular.
LogisticFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome,
                         int max_iter = 100, double tol = 1e-10);

inline constexpr double kWaldZ95 = 1.959963984540054;

}  // namespace gactgan
