#include "vplace/rng.hpp"

#include <cmath>

namespace vplace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag, std::uint64_t index) noexcept {
  // FNV-1a over the tag
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : tag) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(parent ^ h) + splitmix64(index));
}

std::uint64_t Rng::below(std::uint64_t n) {
  // rejection on the top of the range keeps the draw exactly uniform
  const std::uint64_t limit = max() - (max() % n + 1) % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x > limit);
  return x % n;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::exponential(double rate) { return -std::log1p(-uniform()) / rate; }

Rng Rng::split(std::string_view tag, std::uint64_t index) {
  return Rng(derive_seed(engine_(), tag, index));
}

}  // namespace vplace
