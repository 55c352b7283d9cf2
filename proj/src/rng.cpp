#include "jsqdiff/rng.hpp"

#include <cmath>
#include <numbers>

namespace jsqdiff {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint64_t bits) {
  // (k + 0.5) / 2^53 for k in [0, 2^53): never 0, never 1.
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline std::uint64_t join(std::uint32_t hi, std::uint32_t lo) {
  return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream) {}

Philox4x32::Counter RandomStream::next_block() noexcept {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                static_cast<std::uint32_t>(block_ >> 32),
                                static_cast<std::uint32_t>(stream_),
                                static_cast<std::uint32_t>(stream_ >> 32)};
  ++block_;
  return Philox4x32::generate(ctr, key_);
}

void RandomStream::seek(std::uint64_t block) noexcept {
  block_ = block;
  uniform_left_ = 0;
  normal_left_ = 0;
}

double RandomStream::uniform() noexcept {
  if (uniform_left_ == 0) {
    const auto r = next_block();
    uniform_buf_ = {to_open_unit(join(r[0], r[1])), to_open_unit(join(r[2], r[3]))};
    uniform_left_ = 2;
  }
  return uniform_buf_[2 - uniform_left_--];
}

double RandomStream::normal() noexcept {
  if (normal_left_ == 0) {
    const auto r = next_block();
    const double u1 = to_open_unit(join(r[0], r[1]));
    const double u2 = to_open_unit(join(r[2], r[3]));
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    normal_buf_ = {radius * std::cos(angle), radius * std::sin(angle)};
    normal_left_ = 2;
  }
  return normal_buf_[2 - normal_left_--];
}

double RandomStream::exponential() noexcept { return -std::log(uniform()); }

}  // namespace jsqdiff
