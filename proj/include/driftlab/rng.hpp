#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace driftlab {

// splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Domain tags keep seeds drawn for different purposes from colliding even when
// the coordinates coincide.
enum class SeedDomain : std::uint64_t {
  split = 0x53504c4954ULL,       // "SPLIT"
  train = 0x545241494eULL,       // "TRAIN"
  bootstrap = 0x424f4f54ULL,     // "BOOT"
  row_init = 0x524f57ULL,        // "ROW"
  synth = 0x53594e5448ULL,       // "SYNTH"
  embedding = 0x454d424544ULL,   // "EMBED"
};

// Per-cell seed: h0 = splitmix64(master ^ domain), h1 = splitmix64(h0 ^ a),
// seed = splitmix64(h1 ^ b).
constexpr std::uint64_t mix_seed(std::uint64_t master, SeedDomain domain, std::uint64_t a,
                                 std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(master ^ static_cast<std::uint64_t>(domain));
  h = splitmix64(h ^ a);
  return splitmix64(h ^ b);
}

// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// mt19937_64 with hand-rolled draws; the std distributions are
// implementation-defined and would not reproduce across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller (one value per call).
  double gaussian();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace driftlab
