#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace shortmr {

// Deterministic random streams. The engine is std::mt19937_64 (bit-exact per
// the standard); all distributions are implemented here because the standard
// library ones are implementation-defined. Streams derive from a root seed
// plus a list of tags, so independent consumers (subjects, trials, replicates)
// never share or perturb each other's state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : root_(mix(seed)), engine_(root_) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be >= 1.
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n));
  }

  // Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    double v = uniform01();
    double r = std::sqrt(-2.0 * std::log(u));
    double theta = 2.0 * 3.14159265358979323846 * v;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Fisher-Yates with this stream.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // A fresh, statistically independent stream keyed by (root seed, tag,
  // indices...). Derivation does not read or advance this stream's state.
  template <typename... Ids>
  Rng derive(std::string_view tag, Ids... ids) const {
    std::uint64_t h = root_ ^ hash_str(tag);
    ((h = mix(h ^ (static_cast<std::uint64_t>(ids) + 0x9E3779B97F4A7C15ULL))), ...);
    return Rng(h);
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  static std::uint64_t hash_str(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ULL;
    }
    return h;
  }

  std::uint64_t root_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace shortmr
