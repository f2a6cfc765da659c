// Counter-based random streams.
//
// Every draw is a pure function of (seed, stream, substream, counter), so a
// simulation can be replayed from any round and two variants can share the
// randomness they are supposed to share. The mixer is the SplitMix64
// finaliser applied to a Weyl sequence, i.e. SplitMix64 run in counter mode.
#pragma once

#include <cstdint>

namespace ase {

enum class Stream : std::uint64_t {
  Covariate = 1,   // substream: covariate coordinate; counter: round
  Outcome = 2,     // substream: arm; counter: round
  Assignment = 3,  // substream: variant id; counter: round
  Test = 99,
};

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, Stream stream, std::uint64_t substream = 0) noexcept
      : key_(detail::splitmix_mix(detail::splitmix_mix(detail::splitmix_mix(seed + detail::kGolden) ^
                                                       static_cast<std::uint64_t>(stream)) ^
                                  (substream * detail::kGolden))) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return detail::splitmix_mix(key_ + (counter + 1) * detail::kGolden);
  }

  /// Uniform on [0,1) with 53 bits of resolution.
  constexpr double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
};

/// Sequential view over a CounterRng for code that just wants "the next draw".
class SequentialRng {
 public:
  explicit SequentialRng(CounterRng base, std::uint64_t start = 0) noexcept : base_(base), counter_(start) {}
  double uniform() noexcept { return base_.uniform(counter_++); }
  std::uint64_t position() const noexcept { return counter_; }

 private:
  CounterRng base_;
  std::uint64_t counter_;
};

}  // namespace ase
