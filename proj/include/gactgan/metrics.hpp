#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gactgan/schema.hpp"
#include "gactgan/table.hpp"

namespace gactgan {

/// Equal-frequency bin edges of a continuous column, computed on the
/// original table and applied to both tables.
struct ColumnBins {
  std::vector<double> edges;  // ascending, deduplicated
  std::size_t bin(double value) const;
};

ColumnBins equal_frequency_bins(const Table& table, std::size_t column, std::size_t bins = 10);

/// Ratio of counts over the cross-tabulation of `columns`: mean over the
/// union of observed cells of min(count)/max(count); a cell absent from one
/// table contributes 0. Continuous columns are binned with 10
/// equal-frequency bins fitted on `original`.
double ratio_of_counts(const Table& original, const Table& synthetic,
                       const std::vector<std::string>& columns, const Schema& schema);

/// ½(overlap/len₁ + overlap/len₂), floored at 0.
double interval_overlap(double lo1, double hi1, double lo2, double hi2);

struct CioResult {
  double value = 0.0;
  std::vector<std::string> coefficients;  // compared coefficients
  std::vector<double> overlaps;
  std::vector<std::string> excluded;      // flagged: non-convergence, separation or not estimable
};

/// Confidence-interval overlap of 95% Wald intervals of logistic regression
/// coefficients (intercept included) fitted on both tables. Categorical
/// predictors use drop-first dummy coding over the schema categories.
/// Throws NumericError when every coefficient is excluded.
CioResult confidence_interval_overlap(const Table& original, const Table& synthetic,
                                      const Schema& schema, const std::string& outcome,
                                      const std::vector<std::string>& predictors);

struct TcapResult {
  double tcap = 0.0;
  double weap_baseline = 0.0;
  double risk = 0.0;
  std::size_t attack_set = 0;
};

/// (TCAP − WEAP)/(1 − WEAP) truncated to [0, 1]; 0 when WEAP ≥ 1.
double rescaled_risk(double tcap, double weap);

/// Marginal TCAP disclosure risk. Synthetic records whose within-synthetic
/// attribution probability reaches `attack_threshold` form the attack set;
/// TCAP is their mean attribution probability in the original (0 for keys
/// absent from the original). The baseline is the modal target frequency
/// in the synthetic table.
TcapResult tcap_risk(const Table& original, const Table& synthetic,
                     const std::vector<std::string>& keys, const std::string& target,
                     double attack_threshold = 1.0);

/// φU + (1 − φ)(1 − R). Throws UsageError when an input leaves [0, 1].
double selection_score(double utility, double risk, double phi);

struct RuPoint {
  double utility = 0.0;
  double risk = 0.0;
};

/// Pareto membership maximising utility and minimising risk. A point is on
/// the front iff no other point is at least as good in both and strictly
/// better in one; exact duplicates therefore stay on the front together.
std::vector<bool> pareto_front(const std::vector<RuPoint>& points);

/// Mean of the available components.
double aggregate_utility(std::optional<double> roc_mean, std::optional<double> cio_mean);

inline constexpr double kUtilityCutoff = 0.4;

struct CioTarget {
  std::string outcome;
  std::vector<std::string> predictors;
};

struct TcapTarget {
  std::vector<std::string> keys;
  std::string target;
};

struct UtilitySpec {
  std::vector<std::vector<std::string>> roc_targets;  // empty: every 1- and 2-way tabulation
  std::optional<CioTarget> cio;
  std::optional<TcapTarget> tcap;
  double attack_threshold = 1.0;

  /// Fills default ROC targets and checks every referenced column.
  UtilitySpec resolved(const Schema& schema) const;

  nlohmann::json to_json() const;
  static UtilitySpec from_json(const nlohmann::json& j);
};

struct ReplicateMetrics {
  std::string label;  // seed or file the replicate came from
  double roc = 0.0;
  std::optional<double> cio;
  double utility = 0.0;
  double risk = 0.0;
  double selection_score = 0.0;
  std::vector<std::string> notes;
};

struct EvalReport {
  std::vector<ReplicateMetrics> replicates;
  double roc_mean = 0.0;
  std::optional<double> cio_mean;
  double utility = 0.0;
  double risk = 0.0;
  double selection_score = 0.0;
  double phi = 0.75;
};

ReplicateMetrics evaluate_replicate(const Table& original, const Table& synthetic,
                                    const Schema& schema, const UtilitySpec& spec, double phi);

/// Averages replicates; SS is recomputed from the mean U and R.
EvalReport summarize(std::vector<ReplicateMetrics> replicates, double phi);

}  // namespace gactgan
