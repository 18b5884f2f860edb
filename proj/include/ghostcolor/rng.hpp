#pragma once

#include <cstdint>
#include <random>

namespace ghostcolor {

/// Independent random streams per frame. Every random quantity of a frame is
/// drawn from an engine keyed by (seed, stream, frame), never from a shared
/// generator, so frames can be produced in any order or on any thread.
enum class Stream : std::uint64_t {
  mask = 1,
  bucket_noise = 2,
  reference_noise = 3,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t channel,
                                 std::uint64_t frame) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = splitmix64(h ^ channel);
  return splitmix64(h ^ frame);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, Stream stream, std::uint64_t channel,
                          std::uint64_t frame) {
  return Engine(derive_seed(seed, stream, channel, frame));
}

}  // namespace ghostcolor
