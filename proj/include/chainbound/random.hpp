#pragma once

#include <array>
#include <cstdint>

namespace chainbound {

// Philox4x32-10 counter-based generator. The 64-bit key is the experiment seed,
// the upper counter half selects a stream and the lower half is the position.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  static Block generate(std::uint64_t key, std::uint64_t stream, std::uint64_t position) noexcept;
};

// Sequential view of one Philox stream. Streams with distinct ids never overlap,
// so replicate r can draw from stream r regardless of which worker runs it.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept : seed_(seed), stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  // Uniform on (0, 1].
  double uniform_open_low() noexcept;
  // Standard normal via a 128-layer ziggurat.
  double normal() noexcept;
  // +1 or -1 with equal probability.
  double rademacher() noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

// Stream id for sub-stream `component` of replicate `replicate`.
constexpr std::uint64_t substream(std::uint64_t replicate, std::uint32_t component = 0) noexcept {
  return (replicate << 8) | component;
}

}  // namespace chainbound
