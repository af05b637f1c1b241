#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mlmcmc {

/// Counter-based random stream (Philox4x32-10).
///
/// The 64-bit seed is the cipher key and the stream id occupies the upper
/// half of the 128-bit counter, so every (seed, stream_id) pair addresses
/// its own non-overlapping sequence. Streams never share state; hand each
/// chain its own.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; always consumes exactly two words.
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  /// Number of 64-bit words drawn so far.
  std::uint64_t draws() const { return draws_; }

  /// Derive an independent child stream, e.g. one per level or replicate.
  RngStream split(std::uint64_t child) const;

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  std::uint64_t draws_ = 0;
};

}  // namespace mlmcmc
