#pragma once

#include <cstdint>
#include <random>

namespace spineseg {

// mt19937_64 with distribution arithmetic done here rather than through
// <random> distributions, whose output is implementation-defined. The same
// seed therefore gives the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // [lo, hi]; returns lo when hi <= lo.
  double uniform(double lo, double hi) { return hi <= lo ? lo : lo + (hi - lo) * uniform(); }
  // Inclusive on both ends.
  int uniform_int(int lo, int hi) {
    if (hi <= lo) return lo;
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }
  bool bernoulli(double p) { return p > 0.0 && uniform() < p; }

  // Independent child stream for a labeled sub-task.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace spineseg
