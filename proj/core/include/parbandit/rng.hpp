#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "parbandit/types.hpp"

namespace parbandit {

/// Deterministic random stream keyed by (seed, stream id). Two streams with
/// the same key produce identical draws; distinct keys are decorrelated by
/// seeding the engine through a seed sequence. Not thread-safe: one owner at a time.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double normal();
  Vector normal_vector(std::size_t dim);
  /// Uniform integer in [0, count).
  std::size_t uniform_index(std::size_t count);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Stable 64-bit FNV-1a hash; used to name streams and hash configs.
std::uint64_t fnv1a64(std::string_view text);

/// Stream id for a (purpose, a, b) tuple, e.g. ("policy:ucb", repetition, 0).
std::uint64_t stream_id(std::string_view purpose, std::uint64_t a = 0, std::uint64_t b = 0);

}  // namespace parbandit
