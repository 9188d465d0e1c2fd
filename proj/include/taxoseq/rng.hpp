#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace taxoseq {

/// Deterministic random source. Wraps std::mt19937_64 with portable draw
/// helpers, since std::uniform_*_distribution and std::shuffle are not
/// specified bit-for-bit across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t rem =
        (std::numeric_limits<std::uint64_t>::max() % n + 1) % n;
    if (rem == 0) return engine_() % n;
    const std::uint64_t limit = std::uint64_t{0} - rem;  // 2^64 - rem
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return draw % n;
  }

  /// Fisher-Yates shuffle with portable draws.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Derives a module-level seed from the run seed and a tag, so that all
/// randomness in a run flows from one seed field.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t index);

}  // namespace taxoseq
