#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace ligas {

// Portable pseudo-random stream. Standard library distributions are
// implementation-defined, so uniform draws and shuffles are done here to keep
// every output byte identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Independent stream for a named purpose ("model-init", "train-shuffle",
  // "gen", "split") derived from a global seed.
  static Rng substream(std::uint64_t seed, std::string_view name);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::span<const unsigned char> bytes,
                    std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::string_view text,
                    std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::span<const double> values,
                    std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace ligas
