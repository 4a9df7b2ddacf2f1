#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace prism {

// Seeded generator for one purpose ("split", "init", "shuffle", "dropout",
// ...). Distinct labels under the same seed give independent streams, so
// changing how one purpose consumes randomness never perturbs another.
//
// Distributions are written out here rather than taken from <random> because
// the standard leaves their algorithms implementation-defined; these produce
// the same bits on every platform.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view purpose);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, bound), unbiased.
  std::uint64_t below(std::uint64_t bound);
  // Standard normal via Box-Muller (second variate cached).
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

// FNV-1a over the label bytes; stable across compilers unlike std::hash.
std::uint64_t purpose_hash(std::string_view purpose);

}  // namespace prism
