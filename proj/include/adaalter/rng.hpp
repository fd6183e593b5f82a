#pragma once

#include <cstdint>
#include <random>

namespace adaalter {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return mix64(seed ^ mix64(value));
}

/// Key of the counter-based stream owned by `worker` at iteration `t`.
constexpr std::uint64_t stream_key(std::uint64_t run_seed, std::uint64_t worker, std::uint64_t t) {
  return hash_combine(hash_combine(mix64(run_seed), worker), t);
}

/// Fresh engine for (run_seed, worker, t); draws do not depend on execution order.
inline Engine worker_stream(std::uint64_t run_seed, std::uint64_t worker, std::uint64_t t) {
  return Engine(stream_key(run_seed, worker, t));
}

}  // namespace adaalter
