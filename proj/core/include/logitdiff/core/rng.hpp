#pragma once

#include <array>
#include <cstdint>

namespace logitdiff {

// Counter-based generator: Philox4x64-10 keyed by (seed, stream). Block b of
// the stream is philox({b, 0, 0, 0}, {seed, stream}); its four words are
// consumed in order. The output is a pure function of (seed, stream, draw
// index), so it is identical on every platform and independent of how many
// other streams run concurrently.
class RngState {
 public:
  using Block = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  RngState(std::uint64_t seed, std::uint64_t stream) noexcept : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t draws() const noexcept { return draws_; }

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1) with 53 random bits.
  double next_double() noexcept;
  // Uniform integer on [0, bound), rejection-sampled. bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound) noexcept;

  static Block philox4x64_10(Block counter, Key key) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t draws_ = 0;
  Block buffer_{};
};

// Shuffle compatible with std::shuffle's contract but with a documented,
// library-independent draw order (Fisher-Yates from the back).
template <typename RandomIt>
void deterministic_shuffle(RandomIt first, RandomIt last, RngState& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.next_below(i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace logitdiff
