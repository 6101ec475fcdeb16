#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace penstop {

/// Worker count used by parallel loops: the explicit override if set, else
/// hardware concurrency capped by PENALTY_STOP_THREADS.
std::size_t max_threads();
/// 0 clears the override.
void set_max_threads(std::size_t n);

/// Calls body(begin, end) on disjoint contiguous chunks covering [0, n).
/// Chunks never share output slots, so results do not depend on the
/// thread count as long as `body` writes only to its own indices.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 1);

/// splitmix64 finaliser; used to derive per-path seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for path `index` of a run seeded with `seed`.
constexpr std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Per-path generator. Uniforms are built from the top 53 bits so draws are
/// identical on every platform.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t path_index) : engine_(path_seed(seed, path_index)) {}
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace penstop
