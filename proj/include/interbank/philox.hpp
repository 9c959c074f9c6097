#pragma once

#include <array>
#include <cstdint>

namespace interbank {

/// Philox4x32-10 counter-based bijection.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) {
    for (int r = 0; r < 9; ++r) {
      ctr = round(ctr, key);
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return round(ctr, key);
  }

 private:
  static Counter round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
    const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Inverse standard normal distribution function on (0, 1), relative error about 1e-16.
double normal_quantile(double p);

/// Four standard normals addressed by (seed, path, step, block).
///
/// Each 32-bit output is mapped through the normal quantile, so the same
/// address always yields the same values regardless of evaluation order.
void normal_block(std::uint64_t seed, std::uint64_t path, std::uint32_t step, std::uint32_t block, double out[4]);

/// Maps a 32-bit word to the open interval (0, 1).
inline double to_unit_open(std::uint32_t x) { return (static_cast<double>(x) + 0.5) * 0x1p-32; }

}  // namespace interbank
