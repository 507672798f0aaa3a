#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gactgan/cond_sampler.hpp"
#include "gactgan/generator.hpp"
#include "gactgan/swag.hpp"
#include "gactgan/trainer.hpp"
#include "gactgan/transformer.hpp"

namespace gactgan {

/// Binary container shared by checkpoints and posteriors:
///   8-byte magic "GACTGAN\0", u32 format version, u32 kind length, kind,
///   u64 metadata length, metadata JSON, u64 array count, then per array a
///   u64 length and that many little-endian float64 values.
struct Artifact {
  std::string kind;
  nlohmann::json meta;
  std::vector<Eigen::VectorXd> arrays;
};

inline constexpr std::uint32_t kArtifactVersion = 1;

void write_artifact(const std::filesystem::path& path, const Artifact& artifact);
Artifact read_artifact(const std::filesystem::path& path, const std::string& expected_kind);
/// Bytes taken by the header and metadata, i.e. file size minus array payload.
std::size_t artifact_overhead_bytes(const Artifact& artifact);

/// Full training state: config, architectures, θ_G, θ_D, Adam moments,
/// BN running statistics, SWAG moments and the RNG state.
struct Checkpoint {
  TrainConfig config;
  SwagSchedule swag_schedule;
  DataTransformer transformer;
  CondSampler cond_sampler;  // count-only after loading
  GeneratorNet generator;
  DiscriminatorNet discriminator;
  SwagState swag;
  std::string rng_state;
  std::vector<EpochLog> log;
};

void save_checkpoint(const std::filesystem::path& path, const TrainResult& result,
                     const TrainConfig& config, const SwagSchedule& schedule,
                     const DataTransformer& transformer);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Everything synthesis needs: the posterior, the generator architecture,
/// the fitted transformer and the category counts for condition sampling.
struct PosteriorBundle {
  GeneratorPosterior posterior;
  GeneratorArch arch;
  DataTransformer transformer;
  CondSampler cond_sampler;
  nlohmann::json info;  // provenance: loss, seed, config hash

  GeneratorNet make_generator() const { return GeneratorNet(arch); }
};

/// Hash of the architecture descriptor, stored in posterior files.
std::string architecture_hash(const GeneratorArch& arch);

void save_posterior(const std::filesystem::path& path, const PosteriorBundle& bundle);
PosteriorBundle load_posterior(const std::filesystem::path& path);

/// Serialised size of the arrays of a posterior file, in float64 values.
std::size_t posterior_payload_values(const GeneratorPosterior& posterior);

}  // namespace gactgan
