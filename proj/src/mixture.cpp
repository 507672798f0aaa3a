#include "gactgan/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "gactgan/error.hpp"

namespace gactgan {
namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

std::vector<int> kmeans_labels(std::span<const double> x, int k) {
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<double> centers(k);
  for (int j = 0; j < k; ++j) {
    auto idx = static_cast<std::size_t>((j + 0.5) / k * static_cast<double>(n));
    centers[j] = sorted[std::min(idx, n - 1)];
  }
  std::vector<int> labels(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    std::vector<double> sum(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::abs(x[i] - centers[0]);
      for (int j = 1; j < k; ++j) {
        double d = std::abs(x[i] - centers[j]);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (labels[i] != best) {
        changed = true;
        labels[i] = best;
      }
      sum[best] += x[i];
      ++count[best];
    }
    for (int j = 0; j < k; ++j)
      if (count[j]) centers[j] = sum[j] / static_cast<double>(count[j]);
    if (!changed) break;
  }
  return labels;
}

}  // namespace

MixtureFit fit_gaussian_mixture(std::span<const double> x, int components,
                                const MixtureOptions& options) {
  if (x.empty()) throw DataError("mixture fit on empty column");
  if (components < 1) throw DataError("mixture needs at least one component");
  const std::size_t n = x.size();
  const int k = components;
  const double dn = static_cast<double>(n);

  double mean = std::accumulate(x.begin(), x.end(), 0.0) / dn;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= dn;
  const double floor = std::max(var * options.relative_variance_floor,
                                std::numeric_limits<double>::min());

  MixtureFit fit;
  fit.means.assign(k, 0.0);
  fit.stds.assign(k, 0.0);
  fit.weights.assign(k, 0.0);
  std::vector<double> variances(k, floor);
  std::vector<double> resp(n * k, 0.0);

  auto m_step = [&] {
    for (int j = 0; j < k; ++j) {
      double nk = 0.0, sx = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * k + j];
        sx += resp[i * k + j] * x[i];
      }
      if (nk <= 0.0) {
        fit.weights[j] = 0.0;
        fit.means[j] = mean;
        variances[j] = std::max(var, floor);
        continue;
      }
      double mu = sx / nk;
      double sv = 0.0;
      for (std::size_t i = 0; i < n; ++i) sv += resp[i * k + j] * (x[i] - mu) * (x[i] - mu);
      fit.weights[j] = nk / dn;
      fit.means[j] = mu;
      variances[j] = std::max(sv / nk, floor);
    }
  };

  // Returns total log-likelihood of the current parameters and refreshes resp.
  std::vector<double> lp(k);
  auto e_step = [&] {
    std::vector<double> constant(k);
    for (int j = 0; j < k; ++j)
      constant[j] = fit.weights[j] > 0.0
                        ? std::log(fit.weights[j]) - kLogSqrt2Pi - 0.5 * std::log(variances[j])
                        : -std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        double d = x[i] - fit.means[j];
        lp[j] = constant[j] - 0.5 * d * d / variances[j];
        mx = std::max(mx, lp[j]);
      }
      double s = 0.0;
      for (int j = 0; j < k; ++j) s += std::exp(lp[j] - mx);
      double log_norm = mx + std::log(s);
      total += log_norm;
      for (int j = 0; j < k; ++j) resp[i * k + j] = std::exp(lp[j] - log_norm);
    }
    return total;
  };

  auto labels = kmeans_labels(x, k);
  for (std::size_t i = 0; i < n; ++i) resp[i * k + labels[i]] = 1.0;
  m_step();

  double previous = e_step();
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    m_step();
    double current = e_step();
    fit.iterations = iter;
    bool done = std::abs(current - previous) <= options.tol * std::abs(previous);
    previous = current;
    if (done) break;
  }
  fit.log_likelihood = previous;
  for (int j = 0; j < k; ++j) fit.stds[j] = std::sqrt(variances[j]);
  const double free_params = 3.0 * k - 1.0;
  fit.bic = -2.0 * fit.log_likelihood + free_params * std::log(dn);
  return fit;
}

MixtureFit select_gaussian_mixture(std::span<const double> x, const MixtureOptions& options) {
  MixtureFit best = fit_gaussian_mixture(x, 1, options);
  int stale = 0;
  for (int k = 2; k <= options.max_components && stale < 2; ++k) {
    MixtureFit candidate = fit_gaussian_mixture(x, k, options);
    if (candidate.bic < best.bic) {
      best = std::move(candidate);
      stale = 0;
    } else {
      ++stale;
    }
  }
  return best;
}

std::vector<double> mixture_responsibilities(double value, std::span<const double> means,
                                             std::span<const double> stds,
                                             std::span<const double> weights,
                                             const std::vector<bool>& mask) {
  const std::size_t k = means.size();
  std::vector<double> out(k, 0.0);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    if (!mask[j]) continue;
    double z = (value - means[j]) / stds[j];
    out[j] = std::log(weights[j]) - std::log(stds[j]) - 0.5 * z * z;
    mx = std::max(mx, out[j]);
  }
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    out[j] = mask[j] ? std::exp(out[j] - mx) : 0.0;
    s += out[j];
  }
  for (auto& v : out) v /= s;
  return out;
}

}  // namespace gactgan
