#pragma once

// Counter-based Philox4x32-10 and the standard normals derived from it.
// Every variate is a pure function of (seed, stream, index), so ensembles can
// be generated in any order or on any number of threads.

#include <array>
#include <cstdint>
#include <span>

namespace dyadcharge {

struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  /// Ten rounds of the Philox bijection.
  static Counter apply(Counter ctr, Key key);
};

/// Standard normals indexed by a 64-bit position within a stream.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream);

  /// Box-Muller on one Philox block yields the pair (2j, 2j+1).
  double operator()(std::uint64_t index) const;
  void fill(std::span<double> out, std::uint64_t offset = 0) const;

 private:
  std::array<double, 2> pair(std::uint64_t block) const;

  Philox4x32::Key key_;
  std::uint64_t stream_;
};

/// 64 random bits at position `index` of stream `stream`.
std::uint64_t philox_bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Uniform on the open interval (0,1) from 64 random bits.
double uniform_open(std::uint64_t bits);

}  // namespace dyadcharge
