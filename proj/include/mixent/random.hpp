#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace mixent {

/// SplitMix64 finalizer; used to fold seeds and tags into stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Purpose tags keep substreams of one replicate apart.
enum class StreamPurpose : std::uint64_t {
  kSample = 1,
  kGroundTruth = 2,
  kBallProbability = 3,
  kSphereProbability = 4,
  kLawCheck = 5,
  kDistanceCheck = 6,
  kDistanceLaw = 7,
  kGenerate = 8,
};

/// Stream key for (seed, tags...). Order of tags matters.
std::uint64_t derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

/**
 * Philox4x32-10 counter-based generator (Salmon et al., SC'11).
 *
 * The 64-bit key selects an independent stream; the 128-bit counter is the
 * position inside it. Each counter block yields two 64-bit outputs. Draws
 * depend only on (key, position), never on which thread asks.
 */
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t key = 0) : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Skips `blocks` counter blocks (two outputs each).
  void discard_blocks(std::uint64_t blocks);

  /// One application of the 10-round bijection; exposed for known-answer tests.
  static Block bijection(Block counter, std::array<std::uint32_t, 2> key);

 private:
  std::array<std::uint32_t, 2> key_;
  Block counter_{0, 0, 0, 0};
  Block buffer_{};
  int buffered_ = 0;
};

using Engine = Philox4x32;

/// Engine for (seed, tags...).
inline Engine make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  return Engine(derive_stream(seed, tags));
}

inline std::uint64_t tag(StreamPurpose purpose) { return static_cast<std::uint64_t>(purpose); }

/// Uniform double in the open interval (0, 1) with 53 random bits.
inline double uniform_open01(Engine& engine) {
  return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw (Marsaglia polar method on uniform_open01), defined
/// here so the stream of normals is identical on every platform.
double standard_normal(Engine& engine);

}  // namespace mixent
