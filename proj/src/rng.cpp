#include "gactgan/rng.hpp"

#include <sstream>
#include <vector>

namespace gactgan {

std::uint64_t child_seed(std::uint64_t root, std::initializer_list<std::uint64_t> coords) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * coords.size());
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(root);
  for (auto c : coords) push(c);
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void restore_rng_state(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
}

}  // namespace gactgan
