#include "cfattrib/random.hpp"

#include <cstdlib>
#include <string>
#include <thread>

namespace cfattrib {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t root_seed, std::string_view stream,
                          std::uint64_t index) {
  // FNV-1a over the stream name.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return splitmix64(splitmix64(root_seed ^ h) + splitmix64(index));
}

std::size_t configured_threads() {
  std::size_t hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const char* env = std::getenv("CFATTRIB_THREADS");
  if (env == nullptr || *env == '\0') return hw;
  try {
    long requested = std::stol(env);
    if (requested <= 0) return hw;
    return static_cast<std::size_t>(requested);
  } catch (const std::exception&) {
    return hw;
  }
}

}  // namespace cfattrib
