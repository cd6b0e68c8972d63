#pragma once

// Counter-based random numbers (Philox4x32-10). Every variate is a pure
// function of (seed, stream, chain, index), so chains can run in any order
// on any number of threads and still reproduce bit for bit.

#include <array>
#include <cmath>
#include <cstdint>

namespace omflow::rng {

using Block = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline Block philox4x32_10(Block ctr, Key key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

/// Independent streams drawn from the same (seed, chain).
enum class Stream : std::uint32_t { normals = 0, bridge = 1 };

inline Block draw(std::uint64_t seed, Stream stream, std::uint64_t chain, std::uint32_t block) {
  const Block ctr{block, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(chain),
                  static_cast<std::uint32_t>(chain >> 32)};
  const Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return philox4x32_10(ctr, key);
}

/// Uniform on the open interval (0, 1) from 52 random bits; the half-step
/// offset keeps both endpoints out.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t x = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(x >> 12) + 0.5) * 0x1.0p-52;
}

/// Two standard normals (Box-Muller) from one block.
inline std::array<double, 2> normal_pair(const Block& b) {
  const double u1 = to_unit(b[0], b[1]);
  const double u2 = to_unit(b[2], b[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

/// The idx-th standard normal of a chain; consecutive pairs share a block.
inline double normal(std::uint64_t seed, std::uint64_t chain, std::uint64_t idx) {
  const auto pair = normal_pair(draw(seed, Stream::normals, chain, static_cast<std::uint32_t>(idx >> 1)));
  return pair[idx & 1];
}

/// The idx-th uniform of the bridge stream of a chain.
inline double bridge_uniform(std::uint64_t seed, std::uint64_t chain, std::uint64_t idx) {
  const Block b = draw(seed, Stream::bridge, chain, static_cast<std::uint32_t>(idx >> 1));
  return (idx & 1) ? to_unit(b[2], b[3]) : to_unit(b[0], b[1]);
}

/// Sequential reader over the normals of one chain, one block per two draws.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t chain) : seed_(seed), chain_(chain) {}
  double next() {
    if ((idx_ & 1) == 0) cache_ = normal_pair(draw(seed_, Stream::normals, chain_, static_cast<std::uint32_t>(idx_ >> 1)));
    return cache_[idx_++ & 1];
  }
  std::uint64_t index() const { return idx_; }

 private:
  std::uint64_t seed_;
  std::uint64_t chain_;
  std::uint64_t idx_ = 0;
  std::array<double, 2> cache_{};
};

}  // namespace omflow::rng
