#pragma once

#include <cstddef>
#include <deque>
#include <string>

#include <Eigen/Dense>

#include "gactgan/rng.hpp"

namespace gactgan {

/// Running SWA moments of the generator weights plus a FIFO buffer of at
/// most `max_rank` deviation columns θ_t − θ̄_t.
class SwagState {
 public:
  SwagState() = default;
  SwagState(std::size_t num_params, std::size_t max_rank);

  /// θ̄ ← (θ̄·n + θ)/(n + 1), and likewise for the elementwise square.
  void swa_update(const Eigen::VectorXd& theta);
  /// Appends θ − θ̄ using the current (already updated) mean; evicts the
  /// oldest column first when the buffer is full. No-op when max_rank = 0.
  void push_deviation(const Eigen::VectorXd& theta);
  /// One collection step: swa_update then push_deviation.
  void collect(const Eigen::VectorXd& theta);

  std::size_t n_mod() const { return n_mod_; }
  std::size_t num_params() const { return static_cast<std::size_t>(mean_.size()); }
  std::size_t max_rank() const { return max_rank_; }
  std::size_t rank() const { return deviations_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& second_moment() const { return second_moment_; }
  /// Stored columns, oldest first.
  const std::deque<Eigen::VectorXd>& deviation_columns() const { return deviations_; }
  Eigen::MatrixXd deviations() const;

  /// Rebuilds a state from stored moments and deviation columns (oldest first).
  static SwagState restore(std::size_t n_mod, std::size_t max_rank, const Eigen::VectorXd& mean,
                           const Eigen::VectorXd& second_moment, const Eigen::MatrixXd& deviations);

 private:
  std::size_t n_mod_ = 0;
  std::size_t max_rank_ = 0;
  Eigen::VectorXd mean_, second_moment_;
  std::deque<Eigen::VectorXd> deviations_;
};

enum class RankMode { swa_only, diagonal, low_rank };

std::string to_string(RankMode mode);
RankMode rank_mode_from_string(const std::string& s);

/// N(θ̄, α(Σ_diag + D̂D̂ᵀ/(k−1))) over generator weights.
struct GeneratorPosterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd diag_var;
  Eigen::MatrixXd deviations;  // P × k, oldest column first
  double alpha = 0.5;
  RankMode rank_mode = RankMode::low_rank;
  std::size_t n_mod = 0;

  std::size_t num_params() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t rank() const { return static_cast<std::size_t>(deviations.cols()); }

  /// Restricts to the newest `rank` deviation columns and sets α. α = 0
  /// selects swa_only; rank 0 selects diagonal; otherwise low_rank.
  GeneratorPosterior configured(std::size_t rank, double alpha) const;

  /// Degenerate posterior at a single weight vector (no SWAG collection).
  static GeneratorPosterior point_estimate(const Eigen::VectorXd& theta);
};

/// diag_var = max(θ²̄ − θ̄², 0); deviations carried over. Throws NumericError
/// when no snapshot has been collected.
GeneratorPosterior finalize(const SwagState& state, double alpha = 0.5);

/// θ̃ = θ̄ + √α (√diag ⊙ z₁ + D̂ z₂ / √(k − 1)). z₁ is drawn before z₂; the
/// low-rank term is dropped for k < 2. Returns θ̄ without consuming `rng`
/// when α = 0 or the mode is swa_only.
Eigen::VectorXd sample_weights(const GeneratorPosterior& posterior, Rng& rng);

/// Dense α(Σ_diag + D̂D̂ᵀ/(k−1)). Only for small P (tests).
Eigen::MatrixXd dense_covariance(const GeneratorPosterior& posterior);

}  // namespace gactgan
