#include "gactgan/swag.hpp"

#include <cmath>

#include <fmt/format.h>

#include "gactgan/error.hpp"

namespace gactgan {

using Eigen::MatrixXd;
using Eigen::VectorXd;

SwagState::SwagState(std::size_t num_params, std::size_t max_rank)
    : max_rank_(max_rank),
      mean_(VectorXd::Zero(static_cast<Eigen::Index>(num_params))),
      second_moment_(VectorXd::Zero(static_cast<Eigen::Index>(num_params))) {}

void SwagState::swa_update(const VectorXd& theta) {
  if (theta.size() != mean_.size())
    throw DataError(fmt::format("SWAG snapshot has {} weights, expected {}", theta.size(),
                                mean_.size()));
  const double n = static_cast<double>(n_mod_);
  mean_ = (mean_ * n + theta) / (n + 1.0);
  second_moment_ = (second_moment_ * n + theta.cwiseAbs2()) / (n + 1.0);
  ++n_mod_;
}

void SwagState::push_deviation(const VectorXd& theta) {
  if (max_rank_ == 0) return;
  if (theta.size() != mean_.size())
    throw DataError(fmt::format("SWAG snapshot has {} weights, expected {}", theta.size(),
                                mean_.size()));
  if (deviations_.size() == max_rank_) deviations_.pop_front();
  deviations_.push_back(theta - mean_);
}

void SwagState::collect(const VectorXd& theta) {
  swa_update(theta);
  push_deviation(theta);
}

MatrixXd SwagState::deviations() const {
  MatrixXd d(mean_.size(), static_cast<Eigen::Index>(deviations_.size()));
  for (std::size_t k = 0; k < deviations_.size(); ++k)
    d.col(static_cast<Eigen::Index>(k)) = deviations_[k];
  return d;
}

SwagState SwagState::restore(std::size_t n_mod, std::size_t max_rank, const VectorXd& mean,
                             const VectorXd& second_moment, const MatrixXd& deviations) {
  if (mean.size() != second_moment.size() || deviations.rows() != mean.size() ||
      static_cast<std::size_t>(deviations.cols()) > max_rank)
    throw DataError("inconsistent stored SWAG state");
  SwagState s(static_cast<std::size_t>(mean.size()), max_rank);
  s.n_mod_ = n_mod;
  s.mean_ = mean;
  s.second_moment_ = second_moment;
  for (Eigen::Index k = 0; k < deviations.cols(); ++k) s.deviations_.push_back(deviations.col(k));
  return s;
}

std::string to_string(RankMode mode) {
  switch (mode) {
    case RankMode::swa_only: return "swa_only";
    case RankMode::diagonal: return "diagonal";
    case RankMode::low_rank: return "low_rank";
  }
  return "low_rank";
}

RankMode rank_mode_from_string(const std::string& s) {
  if (s == "swa_only") return RankMode::swa_only;
  if (s == "diagonal") return RankMode::diagonal;
  if (s == "low_rank") return RankMode::low_rank;
  throw DataError(fmt::format("unknown rank mode '{}'", s));
}

GeneratorPosterior GeneratorPosterior::configured(std::size_t rank, double alpha) const {
  if (alpha < 0.0 || alpha > 1.0 || !std::isfinite(alpha))
    throw UsageError(fmt::format("covariance scale {} outside [0,1]", alpha));
  GeneratorPosterior out;
  out.mean = mean;
  out.diag_var = diag_var;
  out.n_mod = n_mod;
  out.alpha = alpha;
  const auto k = static_cast<Eigen::Index>(std::min<std::size_t>(rank, this->rank()));
  out.deviations = deviations.rightCols(k);
  if (alpha == 0.0)
    out.rank_mode = RankMode::swa_only;
  else
    out.rank_mode = k == 0 ? RankMode::diagonal : RankMode::low_rank;
  return out;
}

GeneratorPosterior GeneratorPosterior::point_estimate(const VectorXd& theta) {
  GeneratorPosterior out;
  out.mean = theta;
  out.diag_var = VectorXd::Zero(theta.size());
  out.deviations = MatrixXd(theta.size(), 0);
  out.alpha = 0.0;
  out.rank_mode = RankMode::swa_only;
  out.n_mod = 1;
  return out;
}

GeneratorPosterior finalize(const SwagState& state, double alpha) {
  if (state.n_mod() == 0) throw NumericError("cannot finalize SWAG: no snapshots collected");
  GeneratorPosterior out;
  out.mean = state.mean();
  out.diag_var = (state.second_moment() - state.mean().cwiseAbs2()).cwiseMax(0.0);
  out.deviations = state.deviations();
  out.n_mod = state.n_mod();
  return out.configured(out.rank(), alpha);
}

VectorXd sample_weights(const GeneratorPosterior& posterior, Rng& rng) {
  if (posterior.alpha == 0.0 || posterior.rank_mode == RankMode::swa_only) return posterior.mean;
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto p = posterior.mean.size();
  VectorXd z1(p);
  for (Eigen::Index i = 0; i < p; ++i) z1[i] = normal(rng);
  VectorXd noise = posterior.diag_var.cwiseSqrt().cwiseProduct(z1);
  const auto k = posterior.deviations.cols();
  if (posterior.rank_mode == RankMode::low_rank && k >= 2) {
    VectorXd z2(k);
    for (Eigen::Index i = 0; i < k; ++i) z2[i] = normal(rng);
    noise.noalias() += posterior.deviations * z2 / std::sqrt(static_cast<double>(k - 1));
  }
  return posterior.mean + std::sqrt(posterior.alpha) * noise;
}

MatrixXd dense_covariance(const GeneratorPosterior& posterior) {
  MatrixXd cov = MatrixXd::Zero(posterior.mean.size(), posterior.mean.size());
  if (posterior.rank_mode == RankMode::swa_only) return cov;
  cov.diagonal() = posterior.diag_var;
  const auto k = posterior.deviations.cols();
  if (posterior.rank_mode == RankMode::low_rank && k >= 2)
    cov += posterior.deviations * posterior.deviations.transpose() / static_cast<double>(k - 1);
  return posterior.alpha * cov;
}

}  // namespace gactgan
