#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

namespace gactgan {

using Rng = std::mt19937_64;

/// Derives an independent child seed from a root seed and integer
/// coordinates (stream tags, cell indices). Uses std::seed_seq, whose
/// mixing algorithm is fixed by the standard, so the mapping is portable.
std::uint64_t child_seed(std::uint64_t root, std::initializer_list<std::uint64_t> coords);

/// Text form of the generator state, suitable for checkpoints.
std::string rng_state(const Rng& rng);
void restore_rng_state(Rng& rng, const std::string& state);

}  // namespace gactgan
