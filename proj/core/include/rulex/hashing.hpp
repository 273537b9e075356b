#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace rulex {

/// Pseudo-random engine used by every stochastic stage.
using Rng = std::mt19937_64;

/// Identifier written into artifact metadata next to each seed.
inline constexpr std::string_view kGeneratorId = "std::mt19937_64";

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

/// Lower-case, zero-padded 16-digit hex rendering of a 64-bit value.
std::string hex64(std::uint64_t value);

/// Hex FNV-1a digest; the content hash used for artifact provenance.
std::string content_hash(std::string_view bytes);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from (master seed, stage name, index):
/// mix64(master ^ mix64(fnv1a64(stage) + index)).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                          std::uint64_t index = 0);

}  // namespace rulex
