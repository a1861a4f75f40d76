#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace gazenlu::diffcore {

/// Identifies one substream of the counter-based generator.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  friend bool operator==(const RngState&, const RngState&) = default;
};

/// Philox4x32-10 counter-based generator.
///
/// The 64-bit seed is the cipher key; the 128-bit counter is split into a
/// 64-bit stream id (high half) and a 64-bit block index (low half), so
/// distinct stream ids never share a counter value.
class Rng {
 public:
  Rng() : Rng(RngState{}) {}
  explicit Rng(RngState state);
  Rng(std::uint64_t seed, std::uint64_t stream_id) : Rng(RngState{seed, stream_id}) {}

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in (0, 1); never returns 0 or 1.
  double uniform_open();
  double normal();
  /// Standard Gumbel(0, 1) draw: -log(-log(u)).
  double gumbel();
  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  RngState state() const noexcept { return state_; }
  std::uint64_t blocks_consumed() const noexcept { return block_; }

 private:
  void refill();

  RngState state_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  std::size_t cursor_ = 4;
};

/// Mixes a list of integers into a stream id (splitmix64 chain).
std::uint64_t derive_stream(std::initializer_list<std::uint64_t> parts);

/// 64-bit FNV-1a of a byte string; used to key parameter init streams.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace gazenlu::diffcore
