#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mobascore {

// Malformed input text (bad syntax, wrong types). Message carries a byte
// offset when one is known.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structurally valid input that violates a documented constraint
// (out-of-range field, duplicate id, unsorted events, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic random source. std::mt19937_64 has a fully specified output
// stream, and all value mappings below are hand-rolled (the std distribution
// templates are implementation-defined), so a seed produces the same values
// on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    // xorshift-multiply step of splitmix64; small, fast, and well mixed.
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive integer range. The modulo bias is far below anything the
  // pipeline could observe and keeps the mapping trivially portable.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1u;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  // Standard normal via Box-Muller. No cached spare: two uniforms per draw
  // keeps the consumption pattern obvious and reproducible.
  double normal() {
    const double u1 = std::max(uniform(), 0x1.0p-60);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Fisher-Yates with the portable integer mapping above.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives an independent seed for a substream (per match, per epoch, ...).
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    Rng r(seed ^ (0xD1B54A32D192ED03ull * (stream + 1)));
    return r.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace mobascore
