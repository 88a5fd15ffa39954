#include "coralfit/random.hpp"

namespace coralfit {
namespace {

// splitmix64 finaliser
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix(mix(seed) ^ mix(stream + 0x632be59bd9b4e019ULL));
}

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t s = derive_seed(seed, stream);
  std::seed_seq seq{static_cast<std::uint32_t>(s),
                    static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

}  // namespace coralfit
