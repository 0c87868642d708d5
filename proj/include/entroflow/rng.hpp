#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace entroflow {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

// Philox4x32-10 block function.
Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key);

// Random streams are separated by the fourth counter word.
enum class Stream : std::uint32_t { initial = 0, forward = 1, backward = 2, sampling = 3, suite = 4 };

// Stateless generator: every draw is a pure function of (seed, stream, index, block).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  Philox4x32Counter block(Stream s, std::uint64_t index, std::uint32_t block) const;
  // Two uniforms in (0, 1).
  std::pair<double, double> uniforms(Stream s, std::uint64_t index, std::uint32_t block) const;
  // Two independent standard normals (Box-Muller).
  std::pair<double, double> normals(Stream s, std::uint64_t index, std::uint32_t block) const;
  // Standard normal number k of the sequence for (stream, index).
  double normal(Stream s, std::uint64_t index, std::uint64_t k) const;
  double uniform(Stream s, std::uint64_t index, std::uint64_t k) const;

 private:
  std::uint64_t seed_;
};

}  // namespace entroflow
