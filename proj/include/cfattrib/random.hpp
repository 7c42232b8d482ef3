#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace cfattrib {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent seed for a named consumer. Every module draws from
// its own stream so adding a consumer never shifts another stream's values.
std::uint64_t stream_seed(std::uint64_t root_seed, std::string_view stream,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root_seed, std::string_view stream,
                    std::uint64_t index = 0) {
  return Rng(stream_seed(root_seed, stream, index));
}

// Number of workers requested through CFATTRIB_THREADS (0 or unset = hardware
// concurrency).
std::size_t configured_threads();

}  // namespace cfattrib
