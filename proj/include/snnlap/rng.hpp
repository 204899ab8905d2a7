#pragma once

// Philox4x64-10 counter-based generator and seed-derived substreams.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace snnlap {

class Philox4x64 {
 public:
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

  static constexpr void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                                std::uint64_t& lo) noexcept {
    const unsigned __int128 product = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(product >> 64);
    lo = static_cast<std::uint64_t>(product);
  }

  static constexpr Counter single_round(const Counter& ctr, const Key& key) noexcept {
    std::uint64_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
};

/// Purpose tags keep substreams used for different jobs disjoint.
enum class StreamPurpose : std::uint64_t {
  Sampling = 1,
  EvalPoints = 2,
  Trials = 3,
  Quadrature = 4,
  Eigen = 5,
  Test = 99,
};

/// Sequential reader over the Philox output for one (seed, purpose, index) triple.
/// Substream outputs are independent of how work is scheduled across threads.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t index) noexcept
      : key_{seed, static_cast<std::uint64_t>(purpose)}, ctr_{index, 0, 0, 0} {}

  std::uint64_t next_u64() noexcept {
    if (pos_ == 4) {
      buffer_ = Philox4x64::block(ctr_, key_);
      ++ctr_[1];
      pos_ = 0;
    }
    return buffer_[pos_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound) via rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{0} - bound + 1) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= limit) return r % bound;
    }
  }

  double normal() noexcept {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    const double v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
  }

 private:
  Philox4x64::Key key_;
  Philox4x64::Counter ctr_;
  Philox4x64::Counter buffer_{};
  int pos_ = 4;
};

/// Mixes a parent seed with a child index (SplitMix64 finalizer).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t child) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (child + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace snnlap
