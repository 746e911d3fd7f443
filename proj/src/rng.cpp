#include "ligas/rng.hpp"

#include <bit>
#include <cstring>

namespace ligas {

std::uint64_t Rng::next_u64() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t n) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return static_cast<std::size_t>(r % bound);
}

Rng Rng::substream(std::uint64_t seed, std::string_view name) {
  Rng mixer(seed ^ fnv1a(name));
  return Rng(mixer.next_u64());
}

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t h) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t h) {
  return fnv1a(std::span(reinterpret_cast<const unsigned char*>(text.data()),
                         text.size()),
               h);
}

std::uint64_t fnv1a(std::span<const double> values, std::uint64_t h) {
  unsigned char buf[8];
  for (double v : values) {
    // Little-endian byte order regardless of host.
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
    h = fnv1a(std::span<const unsigned char>(buf, 8), h);
  }
  return h;
}

}  // namespace ligas
