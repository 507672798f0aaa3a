#include "gactgan/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "gactgan/error.hpp"
#include "gactgan/hashing.hpp"

namespace gactgan {

using Eigen::VectorXd;

namespace {

constexpr char kMagic[8] = {'G', 'A', 'C', 'T', 'G', 'A', 'N', '\0'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError(fmt::format("'{}': truncated artifact", path.string()));
  return value;
}

VectorXd flatten(const Eigen::MatrixXd& m) {
  return Eigen::Map<const VectorXd>(m.data(), m.size());
}

Eigen::MatrixXd unflatten(const VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw DataError("artifact matrix has the wrong size");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

const VectorXd& array_at(const Artifact& a, std::size_t i) {
  if (i >= a.arrays.size()) throw DataError(fmt::format("{} artifact is missing arrays", a.kind));
  return a.arrays[i];
}

}  // namespace

void write_artifact(const std::filesystem::path& path, const Artifact& artifact) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(fmt::format("cannot write '{}'", tmp.string()));
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kArtifactVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(artifact.kind.size()));
    out.write(artifact.kind.data(), static_cast<std::streamsize>(artifact.kind.size()));
    std::string meta = artifact.meta.dump();
    put<std::uint64_t>(out, meta.size());
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    put<std::uint64_t>(out, artifact.arrays.size());
    for (const auto& a : artifact.arrays) {
      put<std::uint64_t>(out, static_cast<std::uint64_t>(a.size()));
      out.write(reinterpret_cast<const char*>(a.data()),
                static_cast<std::streamsize>(a.size() * sizeof(double)));
    }
    if (!out) throw DataError(fmt::format("failed writing '{}'", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

Artifact read_artifact(const std::filesystem::path& path, const std::string& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError(fmt::format("'{}' is not a gactgan artifact", path.string()));
  auto version = get<std::uint32_t>(in, path);
  if (version != kArtifactVersion)
    throw DataError(fmt::format("'{}': unsupported artifact version {}", path.string(), version));
  Artifact a;
  a.kind.resize(get<std::uint32_t>(in, path));
  in.read(a.kind.data(), static_cast<std::streamsize>(a.kind.size()));
  if (a.kind != expected_kind)
    throw DataError(fmt::format("'{}' holds a {}, expected a {}", path.string(), a.kind,
                                expected_kind));
  std::string meta(get<std::uint64_t>(in, path), '\0');
  in.read(meta.data(), static_cast<std::streamsize>(meta.size()));
  if (!in) throw DataError(fmt::format("'{}': truncated metadata", path.string()));
  a.meta = nlohmann::json::parse(meta);
  auto count = get<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    VectorXd v(static_cast<Eigen::Index>(get<std::uint64_t>(in, path)));
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!in) throw DataError(fmt::format("'{}': truncated array {}", path.string(), i));
    a.arrays.push_back(std::move(v));
  }
  return a;
}

std::size_t artifact_overhead_bytes(const Artifact& artifact) {
  return sizeof(kMagic) + 4 + 4 + artifact.kind.size() + 8 + artifact.meta.dump().size() + 8 +
         8 * artifact.arrays.size();
}

void save_checkpoint(const std::filesystem::path& path, const TrainResult& result,
                     const TrainConfig& config, const SwagSchedule& schedule,
                     const DataTransformer& transformer) {
  Artifact a;
  a.kind = "checkpoint";
  auto log = nlohmann::json::array();
  for (const auto& e : result.log)
    log.push_back({e.epoch, e.d_loss, e.g_loss, e.penalty, e.cross_entropy});
  a.meta = {{"format", "gactgan-checkpoint"},
            {"config", config.to_json()},
            {"swag_schedule",
             {{"enabled", schedule.enabled},
              {"t_collect", schedule.t_collect},
              {"max_rank", schedule.max_rank}}},
            {"generator", result.generator.arch().to_json()},
            {"discriminator", result.discriminator.arch().to_json()},
            {"transformer", transformer.to_json()},
            {"cond", result.cond_sampler.to_json()},
            {"rng", rng_state(result.rng)},
            {"adam_steps", {result.generator_optimizer.steps(), result.discriminator_optimizer.steps()}},
            {"swag", {{"n_mod", result.swag.n_mod()}, {"rank", result.swag.rank()},
                      {"max_rank", result.swag.max_rank()}}},
            {"log", log}};
  const auto& g = result.generator;
  a.arrays = {g.params(),
              result.discriminator.params(),
              result.generator_optimizer.first_moment(),
              result.generator_optimizer.second_moment(),
              result.discriminator_optimizer.first_moment(),
              result.discriminator_optimizer.second_moment(),
              result.swag.mean(),
              result.swag.second_moment(),
              flatten(result.swag.deviations())};
  for (std::size_t i = 0; i < g.running_mean().size(); ++i) {
    a.arrays.push_back(g.running_mean()[i]);
    a.arrays.push_back(g.running_var()[i]);
  }
  write_artifact(path, a);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Artifact a = read_artifact(path, "checkpoint");
  Checkpoint c;
  const auto& m = a.meta;
  c.config = TrainConfig::from_json(m.at("config"));
  c.swag_schedule.enabled = m.at("swag_schedule").at("enabled").get<bool>();
  c.swag_schedule.t_collect = m.at("swag_schedule").at("t_collect").get<int>();
  c.swag_schedule.max_rank = m.at("swag_schedule").at("max_rank").get<std::size_t>();
  c.transformer = DataTransformer::from_json(m.at("transformer"));
  c.cond_sampler = CondSampler::from_json(c.transformer.layout(), m.at("cond"));
  c.generator = GeneratorNet(GeneratorArch::from_json(m.at("generator")));
  c.discriminator = DiscriminatorNet(DiscriminatorArch::from_json(m.at("discriminator")));
  c.generator.set_params(array_at(a, 0));
  c.discriminator.set_params(array_at(a, 1));
  c.rng_state = m.at("rng").get<std::string>();

  const auto p = static_cast<Eigen::Index>(c.generator.num_params());
  const auto n_mod = m.at("swag").at("n_mod").get<std::size_t>();
  const auto rank = static_cast<Eigen::Index>(m.at("swag").at("rank").get<std::size_t>());
  c.swag = SwagState(c.generator.num_params(), m.at("swag").at("max_rank").get<std::size_t>());
  if (n_mod > 0) {
    const VectorXd& mean = array_at(a, 6);
    const VectorXd& second = array_at(a, 7);
    Eigen::MatrixXd dev = unflatten(array_at(a, 8), p, rank);
    c.swag = SwagState::restore(n_mod, c.swag.max_rank(), mean, second, dev);
  }
  std::vector<VectorXd> rm, rv;
  const std::size_t blocks = c.generator.arch().hidden.size();
  for (std::size_t i = 0; i < blocks; ++i) {
    rm.push_back(array_at(a, 9 + 2 * i));
    rv.push_back(array_at(a, 10 + 2 * i));
  }
  c.generator.set_running_stats(std::move(rm), std::move(rv));
  for (const auto& e : m.at("log"))
    c.log.push_back({e.at(0).get<int>(), e.at(1).get<double>(), e.at(2).get<double>(),
                     e.at(3).get<double>(), e.at(4).get<double>()});
  return c;
}

std::string architecture_hash(const GeneratorArch& arch) {
  return sha256_hex(arch.to_json().dump());
}

void save_posterior(const std::filesystem::path& path, const PosteriorBundle& bundle) {
  const auto& post = bundle.posterior;
  if (post.num_params() != bundle.arch.num_params())
    throw DataError("posterior size does not match the generator architecture");
  Artifact a;
  a.kind = "posterior";
  a.meta = {{"format", "gactgan-posterior"},
            {"num_params", post.num_params()},
            {"rank", post.rank()},
            {"alpha", post.alpha},
            {"rank_mode", to_string(post.rank_mode)},
            {"n_mod", post.n_mod},
            {"generator", bundle.arch.to_json()},
            {"arch_hash", architecture_hash(bundle.arch)},
            {"transformer", bundle.transformer.to_json()},
            {"cond", bundle.cond_sampler.to_json()},
            {"info", bundle.info}};
  a.arrays = {post.mean, post.diag_var, flatten(post.deviations)};
  write_artifact(path, a);
}

PosteriorBundle load_posterior(const std::filesystem::path& path) {
  Artifact a = read_artifact(path, "posterior");
  const auto& m = a.meta;
  PosteriorBundle b;
  b.arch = GeneratorArch::from_json(m.at("generator"));
  if (architecture_hash(b.arch) != m.at("arch_hash").get<std::string>())
    throw DataError(fmt::format("'{}': architecture hash mismatch", path.string()));
  b.transformer = DataTransformer::from_json(m.at("transformer"));
  b.cond_sampler = CondSampler::from_json(b.transformer.layout(), m.at("cond"));
  b.info = m.value("info", nlohmann::json::object());
  const auto p = static_cast<Eigen::Index>(m.at("num_params").get<std::size_t>());
  const auto k = static_cast<Eigen::Index>(m.at("rank").get<std::size_t>());
  if (static_cast<std::size_t>(p) != b.arch.num_params())
    throw DataError(fmt::format("'{}': weight count does not match architecture", path.string()));
  auto& post = b.posterior;
  post.mean = array_at(a, 0);
  post.diag_var = array_at(a, 1);
  if (post.mean.size() != p || post.diag_var.size() != p)
    throw DataError(fmt::format("'{}': moment vectors have the wrong length", path.string()));
  post.deviations = unflatten(array_at(a, 2), p, k);
  post.alpha = m.at("alpha").get<double>();
  post.rank_mode = rank_mode_from_string(m.at("rank_mode").get<std::string>());
  post.n_mod = m.at("n_mod").get<std::size_t>();
  return b;
}

std::size_t posterior_payload_values(const GeneratorPosterior& posterior) {
  return static_cast<std::size_t>(posterior.mean.size() + posterior.diag_var.size() +
                                  posterior.deviations.size());
}

}  // namespace gactgan
