#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace sgain {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123 family).
///
/// Stateless: the output is a pure function of (counter, key), which is what
/// lets Wiener paths be extended or refined without disturbing samples that
/// were already handed out.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    ctr = round(ctr, key);
    for (int r = 1; r < 10; ++r) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
      ctr = round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53U;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57U;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9U;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85U;

  static constexpr Counter round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Identifies one Gaussian draw: which path (seed), which component, which
/// refinement level (0 = base increments) and which absolute slot.
struct NoiseKey {
  std::uint64_t seed = 0;
  std::uint32_t component = 0;
  std::uint32_t level = 0;
  std::int64_t slot = 0;
};

/// Open-interval uniform with 53 random bits.
inline double uniform_open(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Uniform draw on (0, 1) for `key` (first half of the Philox block).
inline double keyed_uniform(const NoiseKey& key) noexcept {
  const auto slot = static_cast<std::uint64_t>(key.slot);
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(slot), static_cast<std::uint32_t>(slot >> 32),
                                key.component, key.level};
  const Philox4x32::Key k{static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)};
  const auto out = Philox4x32::generate(ctr, k);
  return uniform_open(out[0], out[1]);
}

/// Standard normal draw for `key` via Box-Muller on one Philox block.
inline double keyed_normal(const NoiseKey& key) noexcept {
  const auto slot = static_cast<std::uint64_t>(key.slot);
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(slot), static_cast<std::uint32_t>(slot >> 32),
                                key.component, key.level};
  const Philox4x32::Key k{static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)};
  const auto out = Philox4x32::generate(ctr, k);
  const double u1 = uniform_open(out[0], out[1]);
  const double u2 = uniform_open(out[2], out[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// SplitMix64 finaliser; used to derive per-path seeds from a run seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace sgain
