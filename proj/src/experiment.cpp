#include "gactgan/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "gactgan/checkpoint.hpp"
#include "gactgan/error.hpp"
#include "gactgan/hashing.hpp"
#include "gactgan/rng.hpp"
#include "gactgan/synthesis.hpp"
#include "gactgan/table.hpp"

namespace gactgan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename F>
auto as_usage(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("{}: {}", where, e.what()));
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw UsageError(fmt::format("{} must be an object", where));
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw UsageError(fmt::format("unknown {} key '{}'", where, key));
}

std::string alpha_tag(double alpha) { return fmt::format("{}", alpha); }

}  // namespace

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot write '{}'", tmp.string()));
    out << text;
    if (!out) throw DataError(fmt::format("write failed for '{}'", tmp.string()));
  }
  fs::rename(tmp, path);
}

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

std::string table_text(const Table& t) {
  std::ostringstream out;
  write_csv(t, out);
  return out.str();
}

}  // namespace

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  if (dataset.path.empty()) throw UsageError("dataset.path is required");
  if (dataset.max_modes < 1) throw UsageError("dataset.max_modes must be >= 1");
  if (losses.empty()) throw UsageError("losses must not be empty");
  if (seeds.empty()) throw UsageError("seeds must not be empty");
  if (swag.ranks.empty() || swag.alphas.empty()) throw UsageError("swag ranks and alphas must not be empty");
  for (double a : swag.alphas)
    if (!(a >= 0.0) || !std::isfinite(a)) throw UsageError(fmt::format("alpha {} must be >= 0", a));
  if (swag.t_collect < 0 || swag.t_collect >= train.epochs)
    throw UsageError(fmt::format("t_collect {} must lie in [0, epochs = {})", swag.t_collect,
                                 train.epochs));
  if (synthesis.batch == 0) throw UsageError("synthesis.batch must be positive");
  if (synthesis.samples.empty()) throw UsageError("synthesis.samples must not be empty");
  for (auto s : synthesis.samples)
    if (s == 0) throw UsageError("synthesis.samples entries must be positive");
  if (eval.phi < 0.0 || eval.phi > 1.0) throw UsageError("eval.phi must lie in [0, 1]");
  train.validate();
}

json ExperimentConfig::to_json() const {
  json tr = train.to_json();
  tr.erase("loss");
  tr.erase("seed");
  json ov = json::object();
  for (const auto& [name, kind] : dataset.overrides) ov[name] = to_string(kind);
  json ls = json::array();
  for (auto l : losses) ls.push_back(to_string(l));
  return {{"dataset", {{"path", dataset.path.string()}, {"overrides", ov}, {"max_modes", dataset.max_modes}}},
          {"train", tr},
          {"losses", ls},
          {"swag", {{"ranks", swag.ranks}, {"alphas", swag.alphas}, {"t_collect", swag.t_collect}}},
          {"synthesis",
           {{"n_sample", synthesis.n_sample},
            {"batch", synthesis.batch},
            {"samples", synthesis.samples},
            {"bn_batches", synthesis.bn_batches}}},
          {"eval", {{"spec", eval.spec.to_json()}, {"phi", eval.phi}}},
          {"seeds", seeds},
          {"output", output.string()}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  reject_unknown(j, {"dataset", "train", "losses", "swag", "synthesis", "eval", "seeds", "output"},
                 "config");
  ExperimentConfig c;
  as_usage("config", [&] {
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      reject_unknown(d, {"path", "overrides", "max_modes"}, "dataset");
      if (d.contains("path")) c.dataset.path = d["path"].get<std::string>();
      if (d.contains("max_modes")) c.dataset.max_modes = d["max_modes"].get<int>();
      if (d.contains("overrides"))
        for (const auto& [name, kind] : d["overrides"].items())
          c.dataset.overrides[name] = column_kind_from_string(kind.get<std::string>());
    }
    if (j.contains("train")) {
      if (j["train"].contains("loss") || j["train"].contains("seed"))
        throw UsageError("train.loss and train.seed are set through 'losses' and 'seeds'");
      c.train = TrainConfig::from_json(j["train"]);
    }
    if (j.contains("losses")) {
      c.losses.clear();
      for (const auto& l : j["losses"]) c.losses.push_back(loss_kind_from_string(l.get<std::string>()));
    }
    if (j.contains("swag")) {
      const auto& s = j["swag"];
      reject_unknown(s, {"ranks", "alphas", "t_collect"}, "swag");
      if (s.contains("ranks")) c.swag.ranks = s["ranks"].get<std::vector<std::size_t>>();
      if (s.contains("alphas")) c.swag.alphas = s["alphas"].get<std::vector<double>>();
      if (s.contains("t_collect")) c.swag.t_collect = s["t_collect"].get<int>();
    }
    if (j.contains("synthesis")) {
      const auto& s = j["synthesis"];
      reject_unknown(s, {"n_sample", "batch", "samples", "bn_batches"}, "synthesis");
      if (s.contains("n_sample")) c.synthesis.n_sample = s["n_sample"].get<std::size_t>();
      if (s.contains("batch")) c.synthesis.batch = s["batch"].get<std::size_t>();
      if (s.contains("samples")) c.synthesis.samples = s["samples"].get<std::vector<std::size_t>>();
      if (s.contains("bn_batches")) c.synthesis.bn_batches = s["bn_batches"].get<std::size_t>();
    }
    if (j.contains("eval")) {
      const auto& e = j["eval"];
      reject_unknown(e, {"spec", "phi"}, "eval");
      if (e.contains("spec")) c.eval.spec = UtilitySpec::from_json(e["spec"]);
      if (e.contains("phi")) c.eval.phi = e["phi"].get<double>();
    }
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("output")) c.output = j["output"].get<std::string>();
    return 0;
  });
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  auto c = from_json(read_json_file(path));
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (c.dataset.path.is_relative()) c.dataset.path = base / c.dataset.path;
  if (!c.output.empty() && c.output.is_relative()) c.output = base / c.output;
  return c;
}

std::string ExperimentConfig::hash() const {
  json j = to_json();
  j.erase("output");
  return sha256_hex(j.dump());
}

std::size_t ExperimentConfig::max_rank() const {
  return *std::max_element(swag.ranks.begin(), swag.ranks.end());
}

TrainConfig ExperimentConfig::train_config(LossKind loss, std::uint64_t seed) const {
  TrainConfig t = train;
  t.loss = loss;
  t.seed = seed;
  return t;
}

// ---------------------------------------------------------------- pool

std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GACTGAN_THREADS")) {
    try {
      long v = std::stol(env);
      if (v >= 1) n = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw UsageError(fmt::format("GACTGAN_THREADS='{}' is not a number", env));
    }
  }
  return n;
}

std::vector<std::exception_ptr> run_pool(const std::vector<std::function<void()>>& jobs,
                                         std::size_t workers) {
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        jobs[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, jobs.size()));
  if (workers == 1) {
    work();
    return errors;
  }
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  return errors;
}

namespace {

std::string describe(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

}  // namespace

// ---------------------------------------------------------------- train

std::string loss_tag(LossKind loss) { return to_string(loss); }

ModelPaths model_paths(const fs::path& root, LossKind loss, std::uint64_t seed) {
  ModelPaths p;
  p.dir = root / "models" / fmt::format("{}-seed{}", loss_tag(loss), seed);
  p.checkpoint = p.dir / "checkpoint.bin";
  p.posterior = p.dir / "posterior.bin";
  p.baseline = p.dir / "baseline.bin";
  p.log = p.dir / "train_log.csv";
  return p;
}

namespace {

struct Dataset {
  Table table;
  DataTransformer transformer;
};

Dataset load_dataset(const DatasetConfig& cfg) {
  Dataset d;
  d.table = read_csv(cfg.path);
  Schema schema = infer_schema(d.table, cfg.overrides);
  for (auto& col : schema) col.modes = cfg.max_modes;
  TransformerOptions opts;
  opts.max_modes = cfg.max_modes;
  d.transformer = DataTransformer::fit(d.table, schema, opts);
  return d;
}

void claim_output(const ExperimentConfig& config, const fs::path& root) {
  fs::create_directories(root);
  const fs::path manifest = root / "manifest.json";
  const std::string h = config.hash();
  if (fs::exists(manifest)) {
    auto m = read_json_file(manifest);
    if (m.value("config_hash", "") != h)
      throw UsageError(fmt::format("'{}' holds results of a different config (hash {})",
                                   root.string(), m.value("config_hash", "?")));
    return;
  }
  json j = config.to_json();
  j.erase("output");
  write_text_file(manifest, json{{"config_hash", h}, {"config", j}}.dump(2) + "\n");
}

void write_log_csv(const std::vector<EpochLog>& log, const fs::path& path) {
  std::string text = "epoch,d_loss,g_loss,penalty,cross_entropy\n";
  for (const auto& e : log)
    text += fmt::format("{},{},{},{},{}\n", e.epoch, e.d_loss, e.g_loss, e.penalty, e.cross_entropy);
  write_text_file(path, text);
}

void train_one(const ExperimentConfig& config, const Dataset& data, LossKind loss,
               std::uint64_t seed, const fs::path& root) {
  const auto paths = model_paths(root, loss, seed);
  if (fs::exists(paths.posterior) && fs::exists(paths.baseline) && fs::exists(paths.log)) return;
  fs::create_directories(paths.dir);
  const TrainConfig tc = config.train_config(loss, seed);
  SwagSchedule schedule;
  schedule.t_collect = config.swag.t_collect;
  schedule.max_rank = config.max_rank();
  fmt::print(stderr, "training {} seed {} ({} epochs)\n", loss_tag(loss), seed, tc.epochs);
  TrainResult result = train(data.table, data.transformer, tc, schedule);

  PosteriorBundle bundle;
  bundle.arch = result.generator.arch();
  bundle.transformer = data.transformer;
  bundle.cond_sampler = result.cond_sampler;
  bundle.info = {{"loss", loss_tag(loss)},
                 {"seed", seed},
                 {"config_hash", config.hash()},
                 {"max_rank", schedule.max_rank}};
  bundle.posterior = finalize(result.swag, 0.5);
  save_checkpoint(paths.checkpoint, result, tc, schedule, data.transformer);
  PosteriorBundle base = bundle;
  base.posterior = GeneratorPosterior::point_estimate(result.generator.params());
  base.info["baseline"] = true;
  save_posterior(paths.baseline, base);
  write_log_csv(result.log, paths.log);
  save_posterior(paths.posterior, bundle);  // last: marks the model complete
}

}  // namespace

TrainSummary cmd_train(const ExperimentConfig& config, const fs::path& root) {
  config.validate();
  claim_output(config, root);
  const Dataset data = load_dataset(config.dataset);
  std::vector<std::function<void()>> jobs;
  std::vector<std::string> coords;
  TrainSummary summary;
  for (auto loss : config.losses)
    for (auto seed : config.seeds) {
      if (fs::exists(model_paths(root, loss, seed).posterior)) {
        ++summary.skipped;
        continue;
      }
      coords.push_back(fmt::format("loss={} seed={}", loss_tag(loss), seed));
      jobs.push_back([&config, &data, &root, loss, seed] { train_one(config, data, loss, seed, root); });
    }
  auto errors = run_pool(jobs, worker_count());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (errors[i])
      summary.failures.push_back(fmt::format("{}: {}", coords[i], describe(errors[i])));
    else
      ++summary.trained;
  }
  return summary;
}

// ---------------------------------------------------------------- synthesize

nlohmann::json cmd_synthesize(const SynthesizeRequest& req) {
  if (req.n == 0) throw UsageError("--n must be positive");
  if (req.batch == 0) throw UsageError("--batch must be positive");
  if (req.samples == 0) throw UsageError("--samples must be positive");
  if (!(req.alpha >= 0.0)) throw UsageError("--alpha must be >= 0");
  PosteriorBundle bundle = load_posterior(req.posterior);
  // Short runs may leave the buffer unfilled; then k_eff < K and the newest columns are used.
  const std::size_t max_rank = bundle.info.value("max_rank", bundle.posterior.rank());
  const bool baseline = bundle.info.value("baseline", false);
  const std::size_t rank = baseline ? 0 : req.rank.value_or(max_rank);
  if (rank > max_rank)
    throw UsageError(fmt::format("rank {} exceeds the trained maximum {}", rank, max_rank));
  // Baseline files hold a point estimate; rank and alpha do not apply.
  GeneratorPosterior post = baseline ? bundle.posterior
                                : bundle.posterior.configured(rank, req.alpha);
  GeneratorNet gen = bundle.make_generator();
  SynthesisOptions opts;
  opts.n_sample = req.n;
  opts.batch = req.batch;
  opts.samples = req.samples;
  opts.bn_batches = req.bn_batches;
  Rng rng(child_seed(req.seed, {4}));
  auto result = synthesize(post, gen, bundle.transformer, bundle.cond_sampler, opts, rng);
  write_text_file(req.out, table_text(result.table));

  json side = {{"alpha", post.alpha},
               {"samples", req.samples},
               {"seed", req.seed},
               {"rank", rank},
               {"k_eff", post.rank()},
               {"rank_mode", to_string(post.rank_mode)},
               {"n", req.n},
               {"batch", req.batch},
               {"batches", result.batches},
               {"posterior", req.posterior.filename().string()},
               {"posterior_sha256", sha256_file(req.posterior)},
               {"model", bundle.info}};
  for (const auto& [k, v] : req.extra.items()) side[k] = v;
  fs::path sidecar = req.out;
  sidecar.replace_extension(".json");
  write_text_file(sidecar, side.dump(2) + "\n");
  return side;
}

// ---------------------------------------------------------------- RU map

std::vector<RuRow> ru_rows(std::vector<RuRow> rows) {
  std::vector<RuPoint> pts;
  for (const auto& r : rows) pts.push_back({r.utility, r.risk});
  auto front = pareto_front(pts);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].pareto = front[i];
    rows[i].cutoff_pass = rows[i].utility > kUtilityCutoff;
  }
  return rows;
}

void write_ru_csv(const std::vector<RuRow>& rows, const fs::path& path) {
  std::string text = "config,loss,K,alpha,S,U,R,SS,pareto,cutoff_pass\n";
  for (const auto& r : rows)
    text += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.config, r.loss, r.rank, r.alpha,
                        r.samples, r.utility, r.risk, r.selection_score, r.pareto ? 1 : 0,
                        r.cutoff_pass ? 1 : 0);
  write_text_file(path, text);
}

void write_ru_svg(const std::vector<RuRow>& rows, const fs::path& path) {
  constexpr double w = 640, h = 480, m = 50;
  auto px = [&](double r) { return m + r * (w - 2 * m); };
  auto py = [&](double u) { return h - m - u * (h - 2 * m); };
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n"
      "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#c33\" stroke-dasharray=\"4 3\"/>\n"
      "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">risk R</text>\n"
      "<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">utility U</text>\n",
      w, h, m, m, w - 2 * m, h - 2 * m, px(0), py(kUtilityCutoff), px(1), py(kUtilityCutoff), w / 2,
      h - 15, h / 2, h / 2);
  std::vector<const RuRow*> front;
  for (const auto& r : rows) {
    s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"{}\"><title>{} U={:.4f} R={:.4f}</title></circle>\n",
                     px(r.risk), py(r.utility), r.pareto ? "#1f5fbf" : "#999", r.config, r.utility,
                     r.risk);
    if (r.pareto) front.push_back(&r);
  }
  std::sort(front.begin(), front.end(), [](const RuRow* a, const RuRow* b) {
    return a->risk != b->risk ? a->risk < b->risk : a->utility < b->utility;
  });
  if (front.size() > 1) {
    s += "<polyline fill=\"none\" stroke=\"#1f5fbf\" points=\"";
    for (const auto* r : front) s += fmt::format("{:.2f},{:.2f} ", px(r->risk), py(r->utility));
    s += "\"/>\n";
  }
  s += "</svg>\n";
  write_text_file(path, s);
}

// ---------------------------------------------------------------- evaluate

namespace {

json replicate_json(const ReplicateMetrics& m) {
  json j{{"label", m.label},
         {"roc", m.roc},
         {"utility", m.utility},
         {"risk", m.risk},
         {"selection_score", m.selection_score},
         {"notes", m.notes}};
  j["cio"] = m.cio ? json(*m.cio) : json(nullptr);
  return j;
}

ReplicateMetrics replicate_from_json(const json& j) {
  ReplicateMetrics m;
  m.label = j.at("label").get<std::string>();
  m.roc = j.at("roc").get<double>();
  if (!j.at("cio").is_null()) m.cio = j["cio"].get<double>();
  m.utility = j.at("utility").get<double>();
  m.risk = j.at("risk").get<double>();
  m.selection_score = j.at("selection_score").get<double>();
  m.notes = j.at("notes").get<std::vector<std::string>>();
  return m;
}

struct ConfigGroup {
  std::string config, loss, rank, alpha, samples;
  std::vector<fs::path> files;
};

json report_entry(const ConfigGroup& g, const EvalReport& r) {
  json reps = json::array();
  for (const auto& m : r.replicates) reps.push_back(replicate_json(m));
  return {{"config", g.config},
          {"loss", g.loss},
          {"K", g.rank},
          {"alpha", g.alpha},
          {"S", g.samples},
          {"replicates", r.replicates.size()},
          {"roc", r.roc_mean},
          {"cio", r.cio_mean ? json(*r.cio_mean) : json(nullptr)},
          {"U", r.utility},
          {"R", r.risk},
          {"SS", r.selection_score},
          {"per_replicate", reps}};
}

std::string json_field(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return "";
  return j[key].is_string() ? j[key].get<std::string>() : j[key].dump();
}

}  // namespace

nlohmann::json cmd_evaluate(const EvaluateRequest& req) {
  Table original = read_csv(req.original);
  Schema schema = req.schema ? schema_from_json(read_json_file(*req.schema)) : infer_schema(original);
  check_table_matches(original, schema);
  const UtilitySpec spec = req.spec.resolved(schema);
  if (!fs::is_directory(req.synthetic_dir))
    throw DataError(fmt::format("'{}' is not a directory", req.synthetic_dir.string()));

  std::vector<fs::path> csvs;
  for (const auto& e : fs::directory_iterator(req.synthetic_dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") csvs.push_back(e.path());
  std::sort(csvs.begin(), csvs.end());
  if (csvs.empty()) throw DataError(fmt::format("no CSV files in '{}'", req.synthetic_dir.string()));

  std::map<std::string, ConfigGroup> groups;
  for (const auto& csv : csvs) {
    fs::path side = csv;
    side.replace_extension(".json");
    ConfigGroup info;
    info.config = csv.stem().string();
    if (fs::exists(side)) {
      json j = read_json_file(side);
      if (j.contains("config")) info.config = j["config"].get<std::string>();
      info.loss = j.contains("model") ? json_field(j["model"], "loss") : "";
      info.rank = json_field(j, "rank");
      info.alpha = json_field(j, "alpha");
      info.samples = json_field(j, "samples");
    }
    auto& g = groups[info.config];
    if (g.files.empty()) {
      info.files.clear();
      g = info;
    }
    g.files.push_back(csv);
  }

  json configs = json::array(), errors = json::array();
  std::vector<RuRow> rows;
  for (const auto& [name, g] : groups) {
    try {
      std::vector<ReplicateMetrics> reps;
      for (const auto& f : g.files) {
        Table syn = read_csv(f);
        check_table_matches(syn, schema);
        auto m = evaluate_replicate(original, syn, schema, spec, req.phi);
        m.label = f.filename().string();
        reps.push_back(std::move(m));
      }
      auto report = summarize(std::move(reps), req.phi);
      configs.push_back(report_entry(g, report));
      rows.push_back({g.config, g.loss, g.rank, g.alpha, g.samples, report.utility, report.risk,
                      report.selection_score});
    } catch (const std::exception& e) {
      errors.push_back({{"config", name}, {"error", e.what()}});
      fmt::print(stderr, "evaluate: config '{}' failed: {}\n", name, e.what());
    }
  }
  rows = ru_rows(std::move(rows));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    configs[i]["pareto"] = rows[i].pareto;
    configs[i]["cutoff_pass"] = rows[i].cutoff_pass;
  }
  json out{{"phi", req.phi}, {"spec", spec.to_json()}, {"configs", configs}, {"errors", errors}};
  write_text_file(req.out, out.dump(2) + "\n");
  fs::path base = req.out;
  base.replace_extension("");
  write_ru_csv(rows, fs::path(base.string() + ".ru_map.csv"));
  if (req.svg) write_ru_svg(rows, fs::path(base.string() + ".ru_map.svg"));
  return out;
}

// ---------------------------------------------------------------- sweep

namespace {

struct Cell {
  LossKind loss;
  bool baseline = false;
  std::size_t rank = 0;
  double alpha = 0.0;
  std::size_t samples = 1;

  std::string label() const {
    if (baseline) return fmt::format("{}-ctgan", loss_tag(loss));
    return fmt::format("{}-K{}-a{}-S{}", loss_tag(loss), rank, alpha_tag(alpha), samples);
  }
  std::uint64_t synthesis_seed(std::uint64_t seed) const {
    if (baseline) return child_seed(seed, {5, static_cast<std::uint64_t>(loss)});
    return child_seed(seed, {6, static_cast<std::uint64_t>(loss), rank,
                             std::bit_cast<std::uint64_t>(alpha), samples});
  }
};

}  // namespace

SweepSummary cmd_sweep(const ExperimentConfig& config, const fs::path& root) {
  config.validate();
  SweepSummary summary;
  const Dataset data = load_dataset(config.dataset);
  const UtilitySpec spec = config.eval.spec.resolved(data.transformer.schema());
  auto trained = cmd_train(config, root);
  summary.failures = trained.failures;
  const std::size_t n_sample = config.synthesis.n_sample ? config.synthesis.n_sample : data.table.num_rows();

  std::vector<Cell> cells;
  for (auto loss : config.losses) {
    cells.push_back({loss, true, 0, 0.0, 1});
    for (auto k : config.swag.ranks)
      for (double a : config.swag.alphas)
        for (auto s : config.synthesis.samples) cells.push_back({loss, false, k, a, s});
  }

  // One job per (cell, seed); results cached next to the synthetic CSV.
  struct Job {
    std::size_t cell;
    std::uint64_t seed;
    fs::path csv, metrics;
  };
  std::vector<Job> jobs_meta;
  std::vector<std::function<void()>> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (auto seed : config.seeds) {
      const Cell cell = cells[c];
      fs::path dir = root / "synthetic" / cell.label();
      Job job{c, seed, dir / fmt::format("seed{}.csv", seed), dir / fmt::format("seed{}.metrics.json", seed)};
      jobs_meta.push_back(job);
      jobs.push_back([&, cell, job] {
        if (fs::exists(job.metrics)) return;
        const auto mp = model_paths(root, cell.loss, job.seed);
        if (!fs::exists(job.csv)) {
          SynthesizeRequest req;
          req.posterior = cell.baseline ? mp.baseline : mp.posterior;
          req.n = n_sample;
          req.batch = config.synthesis.batch;
          req.samples = cell.samples;
          req.alpha = cell.alpha;
          if (!cell.baseline) req.rank = cell.rank;
          req.seed = cell.synthesis_seed(job.seed);
          req.bn_batches = config.synthesis.bn_batches;
          req.out = job.csv;
          req.extra = {{"config", cell.label()}, {"replicate_seed", job.seed}};
          cmd_synthesize(req);
        }
        Table syn = read_csv(job.csv);
        check_table_matches(syn, data.transformer.schema());
        auto m = evaluate_replicate(data.table, syn, data.transformer.schema(), spec, config.eval.phi);
        m.label = fmt::format("seed{}", job.seed);
        write_text_file(job.metrics, replicate_json(m).dump(2) + "\n");
      });
    }
  auto errors = run_pool(jobs, worker_count());

  std::vector<std::vector<ReplicateMetrics>> per_cell(cells.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& jm = jobs_meta[i];
    if (errors[i]) {
      summary.failures.push_back(fmt::format("cell {} seed {}: {}", cells[jm.cell].label(), jm.seed,
                                             describe(errors[i])));
      continue;
    }
    per_cell[jm.cell].push_back(replicate_from_json(read_json_file(jm.metrics)));
  }

  json configs = json::array();
  std::vector<RuRow> rows;
  std::vector<std::size_t> row_cell;
  std::map<LossKind, std::size_t> baseline_row;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (per_cell[c].empty()) continue;
    const Cell& cell = cells[c];
    auto report = summarize(per_cell[c], config.eval.phi);
    ConfigGroup g{cell.label(), loss_tag(cell.loss), cell.baseline ? "" : std::to_string(cell.rank),
                  cell.baseline ? "" : alpha_tag(cell.alpha), std::to_string(cell.samples), {}};
    configs.push_back(report_entry(g, report));
    if (cell.baseline) baseline_row[cell.loss] = rows.size();
    rows.push_back({g.config, g.loss, g.rank, g.alpha, g.samples, report.utility, report.risk,
                    report.selection_score});
    row_cell.push_back(c);
  }
  summary.cells = rows.size();
  rows = ru_rows(std::move(rows));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    configs[i]["pareto"] = rows[i].pareto;
    configs[i]["cutoff_pass"] = rows[i].cutoff_pass;
  }

  std::string gains = "config,loss,K,alpha,S,U,R,delta_U,delta_R\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Cell& cell = cells[row_cell[i]];
    auto b = baseline_row.find(cell.loss);
    if (cell.baseline || b == baseline_row.end()) continue;
    const auto& base = rows[b->second];
    gains += fmt::format("{},{},{},{},{},{},{},{},{}\n", rows[i].config, rows[i].loss, rows[i].rank,
                         rows[i].alpha, rows[i].samples, rows[i].utility, rows[i].risk,
                         rows[i].utility - base.utility, rows[i].risk - base.risk);
  }

  auto best_of = [&](const std::function<bool(const RuRow&)>& keep) {
    const RuRow* best = nullptr;
    for (const auto& r : rows)
      if (keep(r) && (!best || r.selection_score > best->selection_score)) best = &r;
    if (!best) return json(nullptr);
    return json{{"config", best->config}, {"U", best->utility}, {"R", best->risk}, {"SS", best->selection_score}};
  };
  summary.best = {{"phi", config.eval.phi}, {"overall", best_of([](const RuRow&) { return true; })}};
  for (auto loss : config.losses)
    summary.best[loss_tag(loss)] = best_of([&](const RuRow& r) { return r.loss == loss_tag(loss); });

  json report{{"config_hash", config.hash()},
              {"phi", config.eval.phi},
              {"spec", spec.to_json()},
              {"configs", configs},
              {"failures", summary.failures}};
  write_text_file(root / "report.json", report.dump(2) + "\n");
  write_ru_csv(rows, root / "ru_map.csv");
  write_ru_svg(rows, root / "ru_map.svg");
  write_text_file(root / "gains.csv", gains);
  write_text_file(root / "best.json", summary.best.dump(2) + "\n");
  return summary;
}

}  // namespace gactgan
