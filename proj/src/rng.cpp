#include "entroflow/rng.hpp"

#include <cmath>
#include <numbers>

namespace entroflow {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform in (0, 1) from two words.
inline double to_unit(std::uint32_t a, std::uint32_t b) {
  std::uint64_t bits = (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, ctr[0], hi0, lo0);
    mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

Philox4x32Counter CounterRng::block(Stream s, std::uint64_t index, std::uint32_t blk) const {
  Philox4x32Counter ctr{blk, static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                        static_cast<std::uint32_t>(s)};
  Philox4x32Key key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  return philox4x32(ctr, key);
}

std::pair<double, double> CounterRng::uniforms(Stream s, std::uint64_t index, std::uint32_t blk) const {
  auto r = block(s, index, blk);
  return {to_unit(r[0], r[1]), to_unit(r[2], r[3])};
}

std::pair<double, double> CounterRng::normals(Stream s, std::uint64_t index, std::uint32_t blk) const {
  auto [u1, u2] = uniforms(s, index, blk);
  double rad = std::sqrt(-2.0 * std::log(u1));
  double ang = 2.0 * std::numbers::pi * u2;
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

double CounterRng::normal(Stream s, std::uint64_t index, std::uint64_t k) const {
  auto z = normals(s, index, static_cast<std::uint32_t>(k >> 1));
  return (k & 1u) ? z.second : z.first;
}

double CounterRng::uniform(Stream s, std::uint64_t index, std::uint64_t k) const {
  auto u = uniforms(s, index, static_cast<std::uint32_t>(k >> 1));
  return (k & 1u) ? u.second : u.first;
}

}  // namespace entroflow
