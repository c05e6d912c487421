#pragma once

#include <array>
#include <cstdint>

namespace lifshitz {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Each output
// block is a pure function of (counter, key), so any draw can be recomputed
// from its coordinates without replaying a stream.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += kWeylA;
        key[1] += kWeylB;
      }
      ctr = round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMulA = 0xD2511F53u;
  static constexpr std::uint32_t kMulB = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
  static constexpr std::uint32_t kWeylB = 0xBB67AE85u;

  static constexpr Counter round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = std::uint64_t{kMulA} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMulB} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Independent named streams for one master seed.
enum class Stream : std::uint32_t {
  couplings = 0,
  bootstrap = 1,
  solver_start = 2,
  test_data = 3,
};

/// Keyed uniform source: draw(a, b) is a deterministic function of
/// (seed, stream, a, b) with values in [0, 1).
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, Stream stream) noexcept
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32) ^
                 (static_cast<std::uint32_t>(stream) * 0x85EBCA6Bu)} {}

  /// Two independent uniforms in [0, 1) for the coordinate pair (a, b).
  constexpr std::array<double, 2> uniform2(std::uint64_t a, std::uint64_t b) const noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(a),
                                  static_cast<std::uint32_t>(a >> 32),
                                  static_cast<std::uint32_t>(b),
                                  static_cast<std::uint32_t>(b >> 32)};
    const auto out = Philox4x32::generate(ctr, key_);
    return {to_unit(out[0], out[1]), to_unit(out[2], out[3])};
  }

  constexpr double uniform(std::uint64_t a, std::uint64_t b) const noexcept {
    return uniform2(a, b)[0];
  }

 private:
  static constexpr double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  Philox4x32::Key key_;
};

}  // namespace lifshitz
