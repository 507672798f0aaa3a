#pragma once

#include <span>
#include <vector>

namespace gactgan {

struct MixtureOptions {
  int max_components = 10;
  int max_iter = 100;
  double tol = 1e-4;  // relative change of the mean log-likelihood
  // Component variance floor, relative to the column variance.
  double relative_variance_floor = 1e-6;
};

struct MixtureFit {
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<double> weights;  // sums to 1
  double log_likelihood = 0.0;  // total, at the returned parameters
  double bic = 0.0;
  int iterations = 0;
};

/// EM fit of a k-component univariate Gaussian mixture, initialised from
/// 1-D k-means seeded at evenly spaced quantiles. Deterministic.
MixtureFit fit_gaussian_mixture(std::span<const double> x, int components,
                                const MixtureOptions& options = {});

/// Fits k = 1..max_components and keeps the fit with the lowest BIC.
/// Stops early once BIC has failed to improve for two consecutive k.
MixtureFit select_gaussian_mixture(std::span<const double> x, const MixtureOptions& options = {});

/// Posterior component probabilities of `value` under the given mixture,
/// restricted to components whose mask entry is set (renormalised).
std::vector<double> mixture_responsibilities(double value, std::span<const double> means,
                                             std::span<const double> stds,
                                             std::span<const double> weights,
                                             const std::vector<bool>& mask);

}  // namespace gactgan
