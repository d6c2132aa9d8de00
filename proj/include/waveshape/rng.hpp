#pragma once

#include <cmath>
#include <cstdint>

namespace waveshape {

/// Counter-based pseudorandom generator. The i-th output is a pure function
/// of (key, i), so a stream can be replayed from its key alone and streams
/// derived via split() are independent of how much of the parent was consumed.
///
/// Stream-splitting rule used across the project: one stream per logical
/// draw site — split(chain_key, t) for the noise of reverse step t,
/// split(base_seed, shape_index) for the per-shape generation stream.
class Rng {
 public:
  explicit Rng(std::uint64_t key = 0) : key_(key) {}

  std::uint64_t key() const { return key_; }

  /// Child stream derived from (key, index); deterministic, overlap-free
  /// for distinct indices in practice.
  Rng split(std::uint64_t index) const {
    return Rng(mix(key_ ^ mix(index + 0x632be59bd9b4e019ull)));
  }

  std::uint64_t next_u64() {
    counter_ += 0x9e3779b97f4a7c15ull;
    return mix(key_ + counter_);
  }

  /// Uniform double in the open interval (0, 1).
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  /// Standard normal via Box-Muller; the second value of each pair is cached.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  template <typename Array>
  void fill_normal(Array& out) {
    for (auto& v : out) v = next_normal();
  }

 private:
  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace waveshape
