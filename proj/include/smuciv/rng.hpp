#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace smuciv {

// Philox4x32-10 counter-based generator. The 64-bit seed is the key and the
// stream id occupies the upper half of the 128-bit counter, so every
// (seed, stream) pair is an independent, reproducible sequence.
class Philox {
 public:
  using result_type = std::uint64_t;

  explicit Philox(std::uint64_t seed = 0, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int next_ = 4;
};

using Rng = Philox;

// Uniform on the open interval (0, 1) with 53 random bits.
double uniform01(Rng& rng);
double standard_normal(Rng& rng);
double exponential(Rng& rng);

}  // namespace smuciv
