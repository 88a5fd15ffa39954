#pragma once

#include <cstdint>
#include <random>

namespace coralfit {

using Rng = std::mt19937_64;

/// Mixes (seed, stream) into an independent generator seed so per-chain and
/// per-task streams do not depend on execution order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

Rng make_stream(std::uint64_t seed, std::uint64_t stream);

}  // namespace coralfit
