#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "gactgan/error.hpp"
#include "gactgan/experiment.hpp"
#include "gactgan/schema.hpp"
#include "gactgan/table.hpp"

using namespace gactgan;
namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("'{}': {}", path.string(), e.what()));
  }
}

int report_failures(const std::vector<std::string>& failures) {
  for (const auto& f : failures) fmt::print(stderr, "failed: {}\n", f);
  return failures.empty() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gactgan: conditional tabular GAN with a SWAG generator posterior"};
  app.require_subcommand(1);

  fs::path config_path, out_path;

  auto* train = app.add_subcommand("train", "train one model per (loss, seed)");
  train->add_option("--config", config_path, "experiment config JSON")->required();
  train->add_option("--out", out_path, "output directory (default: config 'output')");

  SynthesizeRequest syn;
  std::optional<std::size_t> rank;
  auto* synth = app.add_subcommand("synthesize", "sample a synthetic table from a posterior");
  synth->add_option("--posterior", syn.posterior)->required();
  synth->add_option("--n", syn.n, "rows to generate")->required();
  synth->add_option("--batch", syn.batch, "batch size M")->capture_default_str();
  synth->add_option("--samples", syn.samples, "posterior draws averaged per batch (S)")->capture_default_str();
  synth->add_option("--alpha", syn.alpha, "covariance scale")->capture_default_str();
  synth->add_option("--rank", rank, "deviation columns to use (default: all stored)");
  synth->add_option("--bn-batches", syn.bn_batches)->capture_default_str();
  synth->add_option("--seed", syn.seed)->capture_default_str();
  synth->add_option("--out", syn.out, "output CSV")->required();

  EvaluateRequest ev;
  fs::path spec_path;
  std::optional<fs::path> schema_path;
  auto* eval = app.add_subcommand("evaluate", "score synthetic CSVs against the original");
  eval->add_option("--original", ev.original)->required();
  eval->add_option("--synthetic", ev.synthetic_dir, "directory of synthetic CSVs")->required();
  eval->add_option("--spec", spec_path, "utility/risk spec JSON");
  eval->add_option("--schema", schema_path, "schema JSON (default: inferred from the original)");
  eval->add_option("--phi", ev.phi)->capture_default_str();
  eval->add_option("--out", ev.out, "report JSON")->required();
  eval->add_flag("--svg", ev.svg, "also draw the R-U map");

  auto* sweep = app.add_subcommand("sweep", "train, synthesize and evaluate the full grid");
  sweep->add_option("--config", config_path)->required();
  sweep->add_option("--out", out_path, "output directory (default: config 'output')");

  fs::path csv_path;
  std::vector<std::string> categorical, continuous;
  auto* schema = app.add_subcommand("schema", "infer a schema from a CSV");
  schema->add_option("--csv", csv_path)->required();
  schema->add_option("--out", out_path)->required();
  schema->add_option("--categorical", categorical, "force columns categorical");
  schema->add_option("--continuous", continuous, "force columns continuous");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    auto experiment = [&] {
      auto c = ExperimentConfig::load(config_path);
      if (!out_path.empty()) c.output = out_path;
      if (c.output.empty()) throw UsageError("no output directory: pass --out or set 'output'");
      return c;
    };
    if (*train) {
      auto c = experiment();
      auto s = cmd_train(c, c.output);
      fmt::print("trained {}, skipped {}\n", s.trained, s.skipped);
      return report_failures(s.failures);
    }
    if (*synth) {
      syn.rank = rank;
      auto side = cmd_synthesize(syn);
      fmt::print("wrote {} rows to {}\n", syn.n, syn.out.string());
      return 0;
    }
    if (*eval) {
      if (!spec_path.empty()) ev.spec = UtilitySpec::from_json(read_json(spec_path));
      ev.schema = schema_path;
      auto report = cmd_evaluate(ev);
      for (const auto& c : report["configs"])
        fmt::print("{}: U={:.4f} R={:.4f} SS={:.4f}\n", c["config"].get<std::string>(),
                   c["U"].get<double>(), c["R"].get<double>(), c["SS"].get<double>());
      return report["errors"].empty() ? 0 : 3;
    }
    if (*sweep) {
      auto c = experiment();
      auto s = cmd_sweep(c, c.output);
      fmt::print("{} configs evaluated\n{}\n", s.cells, s.best.dump(2));
      return report_failures(s.failures);
    }
    if (*schema) {
      KindOverrides ov;
      for (const auto& c : categorical) ov[c] = ColumnKind::categorical;
      for (const auto& c : continuous) ov[c] = ColumnKind::continuous;
      auto s = infer_schema(csv_path, ov);
      write_text_file(out_path, schema_to_json(s).dump(2) + "\n");
      return 0;
    }
  } catch (const UsageError& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return 1;
  } catch (const DataError& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    fmt::print(stderr, "numeric error: {}\n", e.what());
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return 2;
  }
  return 1;
}
