#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace ssr::rng {

// splitmix64 step; advances the state and returns the next value.
inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stateless seed derivation so every sampling site in a run is a pure
// function of (base seed, coordinates). Keeps resumed runs bit-identical.
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  uint64_t s = base;
  splitmix64(s);
  s ^= 0x6a09e667f3bcc909ULL + a;
  splitmix64(s);
  s ^= 0xbb67ae8584caa73bULL + b;
  splitmix64(s);
  s ^= 0x3c6ef372fe94f82bULL + c;
  uint64_t out = splitmix64(s);
  return out;
}

inline uint64_t hash_string(std::string_view s) {
  // FNV-1a 64
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Small deterministic generator used everywhere instead of <random>
// distributions, whose sequences differ across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, n) via rejection.
  uint64_t next_below(uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  uint64_t state() const { return state_; }

 private:
  uint64_t state_;
};

// Fisher-Yates with our own generator, stable across platforms.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace ssr::rng
