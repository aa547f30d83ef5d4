#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace cmi {

using Rng = std::mt19937_64;

// Mixes a root seed with a stage name ("split", "init", "masking", ...) so
// each stage draws from its own reproducible stream.
std::uint64_t DeriveSeed(std::uint64_t root, std::string_view name);

// Stable 64-bit FNV-1a hash; used for per-example seeds keyed by snippet id.
std::uint64_t Fnv1a64(std::string_view text);

// Fisher-Yates over [0, n) driven only by the raw engine output, so the
// permutation does not depend on the standard library's distributions.
std::vector<std::size_t> Permutation(std::size_t n, Rng& rng);

// Uniform integer in [0, bound) without modulo bias.
std::uint64_t UniformIndex(Rng& rng, std::uint64_t bound);

// Uniform real in [0, 1) with 53 random bits.
double Uniform01(Rng& rng);

// Standard normal via Box-Muller.
double Normal(Rng& rng);

}  // namespace cmi
