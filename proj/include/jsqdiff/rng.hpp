#pragma once

#include <array>
#include <cstdint>

namespace jsqdiff {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// The key holds the user seed, the counter holds (block index, stream id),
// so any (seed, stream, position) is addressable in O(1).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) noexcept;
};

// One reproducible stream of uniforms and standard normals.
// Replica r of an experiment seeded with s uses RandomStream(s, r).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept;

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  // Standard normal via Box-Muller on one Philox block.
  double normal() noexcept;
  // -log(U): unit-rate exponential.
  double exponential() noexcept;

  // Jump to an absolute block index; discards any buffered values.
  void seek(std::uint64_t block) noexcept;
  std::uint64_t block() const noexcept { return block_; }

 private:
  Philox4x32::Counter next_block() noexcept;

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;

  std::array<double, 2> uniform_buf_{};
  int uniform_left_ = 0;
  std::array<double, 2> normal_buf_{};
  int normal_left_ = 0;
};

}  // namespace jsqdiff
