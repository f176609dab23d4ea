#pragma once

#include <cstdint>
#include <limits>

namespace tvsemi {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child key for stream or replication `id`; distinct ids give independent streams.
inline constexpr std::uint64_t subkey(std::uint64_t key, std::uint64_t id) {
  return splitmix64(key ^ splitmix64(id ^ 0x632be59bd9b4e019ULL));
}

/// SplitMix64 as a UniformRandomBitGenerator. Cheap to construct, so one is
/// built per (stream, time index) draw.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Counter-based generator: the draw for (stream, t) depends only on the key,
/// the stream id and t, never on what was drawn before.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  SplitMix64 at(std::uint64_t stream, std::int64_t t) const {
    return SplitMix64(subkey(subkey(key_, stream), static_cast<std::uint64_t>(t)));
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

}  // namespace tvsemi
