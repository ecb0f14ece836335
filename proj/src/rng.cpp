#include "dyadcharge/rng.hpp"

#include <cmath>
#include <numbers>

namespace dyadcharge {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = std::uint64_t{a} * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32::Counter Philox4x32::apply(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

double uniform_open(std::uint64_t bits) {
  // 52 bits centred in their bucket; the extremes 2^-53 and 1 - 2^-53 are exact.
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

std::uint64_t philox_bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  const auto r = Philox4x32::apply(ctr, {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  return (std::uint64_t{r[0]} << 32) | r[1];
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

std::array<double, 2> NormalStream::pair(std::uint64_t block) const {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                                static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  const auto r = Philox4x32::apply(ctr, key_);
  const double u1 = uniform_open((std::uint64_t{r[0]} << 32) | r[1]);
  const double u2 = uniform_open((std::uint64_t{r[2]} << 32) | r[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

double NormalStream::operator()(std::uint64_t index) const { return pair(index >> 1)[index & 1]; }

void NormalStream::fill(std::span<double> out, std::uint64_t offset) const {
  std::size_t i = 0;
  if (offset & 1) {
    out[0] = (*this)(offset);
    i = 1;
  }
  for (; i + 1 < out.size(); i += 2) {
    const auto p = pair((offset + i) >> 1);
    out[i] = p[0];
    out[i + 1] = p[1];
  }
  if (i < out.size()) out[i] = (*this)(offset + i);
}

}  // namespace dyadcharge
