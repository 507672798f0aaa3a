#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gactgan/losses.hpp"
#include "gactgan/metrics.hpp"
#include "gactgan/schema.hpp"
#include "gactgan/trainer.hpp"

namespace gactgan {

struct DatasetConfig {
  std::filesystem::path path;
  KindOverrides overrides;
  int max_modes = 10;
};

struct SweepSwagConfig {
  std::vector<std::size_t> ranks{0, 30, 100, 150};
  std::vector<double> alphas{0.0, 0.25, 0.5, 1.0};
  int t_collect = 50;
};

struct SweepSynthesisConfig {
  std::size_t n_sample = 0;  // 0: as many rows as the training data
  std::size_t batch = 500;
  std::vector<std::size_t> samples{1};
  std::size_t bn_batches = 10;
};

struct EvalConfig {
  UtilitySpec spec;
  double phi = 0.75;
};

/// One JSON document. `train` takes every TrainConfig key except `loss` and
/// `seed`, which come from `losses` and `seeds`. Unknown keys are rejected.
struct ExperimentConfig {
  DatasetConfig dataset;
  TrainConfig train;
  std::vector<LossKind> losses{LossKind::wasserstein, LossKind::vanilla};
  SweepSwagConfig swag;
  SweepSynthesisConfig synthesis;
  EvalConfig eval;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::filesystem::path output;

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  /// Relative dataset and output paths resolve against the file's directory.
  static ExperimentConfig load(const std::filesystem::path& path);

  /// SHA-256 of the canonical JSON without the output path.
  std::string hash() const;
  std::size_t max_rank() const;
  TrainConfig train_config(LossKind loss, std::uint64_t seed) const;
};

/// Worker count: GACTGAN_THREADS if set, else hardware concurrency, at least 1.
std::size_t worker_count();

/// Runs `jobs` on up to `workers` threads. Each job's exception is captured
/// and returned at its index; the rest keep running.
std::vector<std::exception_ptr> run_pool(const std::vector<std::function<void()>>& jobs,
                                         std::size_t workers);

std::string loss_tag(LossKind loss);

struct ModelPaths {
  std::filesystem::path dir, checkpoint, posterior, baseline, log;
};
ModelPaths model_paths(const std::filesystem::path& root, LossKind loss, std::uint64_t seed);

struct TrainSummary {
  std::size_t trained = 0;
  std::size_t skipped = 0;
  std::vector<std::string> failures;
};

/// Trains one model per (loss, seed) into `root`, skipping models whose
/// posterior already exists. Writes checkpoint, SWAG posterior with
/// max(ranks) columns, point-estimate baseline and the per-epoch log.
TrainSummary cmd_train(const ExperimentConfig& config, const std::filesystem::path& root);

struct SynthesizeRequest {
  std::filesystem::path posterior;
  std::size_t n = 0;
  std::size_t batch = 500;
  std::size_t samples = 1;
  double alpha = 0.5;
  std::optional<std::size_t> rank;  // default: every stored column
  std::uint64_t seed = 0;
  std::size_t bn_batches = 10;
  std::filesystem::path out;
  nlohmann::json extra;  // merged into the sidecar
};

/// Writes the CSV and `<out stem>.json` with α, S, seed, rank and the
/// posterior's SHA-256. Returns the sidecar.
nlohmann::json cmd_synthesize(const SynthesizeRequest& request);

struct RuRow {
  std::string config;
  std::string loss;
  std::string rank;   // "" when not applicable
  std::string alpha;
  std::string samples;
  double utility = 0.0;
  double risk = 0.0;
  double selection_score = 0.0;
  bool pareto = false;
  bool cutoff_pass = false;
};

/// Pareto and cutoff flags filled in from U and R.
std::vector<RuRow> ru_rows(std::vector<RuRow> rows);
void write_ru_csv(const std::vector<RuRow>& rows, const std::filesystem::path& path);
void write_ru_svg(const std::vector<RuRow>& rows, const std::filesystem::path& path);

struct EvaluateRequest {
  std::filesystem::path original;
  std::filesystem::path synthetic_dir;
  UtilitySpec spec;
  std::optional<std::filesystem::path> schema;  // else inferred from the original
  double phi = 0.75;
  std::filesystem::path out;  // metrics JSON; RU map beside it
  bool svg = false;
};

/// Groups the synthetic CSVs by the `config` field of their sidecars (the
/// file stem when there is none), averages replicates and writes the
/// report, `<out stem>.ru_map.csv` and optionally the SVG. Failing configs
/// are reported and skipped. Returns the report.
nlohmann::json cmd_evaluate(const EvaluateRequest& request);

struct SweepSummary {
  std::size_t cells = 0;
  std::vector<std::string> failures;
  nlohmann::json best;
};

/// Trains once per (loss, seed), then synthesizes and evaluates every
/// (loss, K, α, S, seed) cell plus the point-estimate baseline. Completed
/// files are reused. Writes report.json, ru_map.csv, ru_map.svg, gains.csv
/// and best.json under `root`.
SweepSummary cmd_sweep(const ExperimentConfig& config, const std::filesystem::path& root);

/// Atomic text write via a temporary sibling.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gactgan
