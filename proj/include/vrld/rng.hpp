#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace vrld {

/// Philox4x32-10 counter-based generator.
///
/// The 64-bit seed is the key; the 128-bit counter is split into a 64-bit
/// block index (low words) and a 64-bit stream id (high words). Distinct
/// stream ids never overlap, which is how replicate chains and the
/// per-chain substreams are derived (see stream_id()).
class Philox4x32 {
 public:
  using result_type = std::uint32_t;

  explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (pos_ == 4) {
      block_ = generate(block_index_++);
      pos_ = 0;
    }
    return block_[pos_++];
  }

  std::uint64_t stream() const noexcept { return stream_; }

  /// Raw block function; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> bijection(std::array<std::uint32_t, 4> ctr,
                                                std::array<std::uint32_t, 2> key) noexcept;

 private:
  std::array<std::uint32_t, 4> generate(std::uint64_t block) const noexcept {
    return bijection({static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                     key_);
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
};

enum class Substream : std::uint64_t { Noise = 0, Index = 1, Init = 2 };

/// Stream-splitting rule: replicate r, substream s -> stream id 4*r + s.
constexpr std::uint64_t stream_id(std::uint64_t replicate, Substream s) noexcept {
  return replicate * 4 + static_cast<std::uint64_t>(s);
}

}  // namespace vrld
