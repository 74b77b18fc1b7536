#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace logitlab {

/// Counter-based pseudo-random generator. Draw i is a bit-mix of
/// (key, i), where the key is derived from an explicit 64-bit seed and an
/// optional stream id. The algorithm is fixed (splitmix64 finalizer), so
/// identical seeds reproduce identical streams on every platform,
/// independent of the standard library.
///
/// Not thread-safe; give each worker its own generator via split().
class Rng {
public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(mix(seed ^ 0x9e3779b97f4a7c15ULL) + stream)) {}

  std::uint64_t next_u64() {
    return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
  }

  /// Uniform on [0,1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0,1]; safe as a log() argument.
  double uniform_pos() { return 1.0 - uniform(); }

  /// Standard normal via Box-Muller; values come in cached pairs.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double t = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// +1 or -1 with equal probability.
  int rademacher() { return (next_u64() >> 63) ? 1 : -1; }

  /// Uniform integer in [0, n), n > 0. Multiply-shift; the O(n/2^64) bias
  /// is irrelevant at the sizes used here.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  /// Independent generator for a named sub-stream of this one.
  Rng split(std::uint64_t stream) const {
    return Rng(key_, mix(stream + 0x6a09e667f3bcc909ULL));
  }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace logitlab
