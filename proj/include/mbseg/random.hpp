#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace mbseg {

/// Counter-based random stream. The n-th output is a pure function of
/// (key, n), so a stream can be split into labelled sub-streams without
/// consuming from the parent. Satisfies UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed = 0);

  /// Independent child stream identified by a label ("partition", "labels", ...).
  [[nodiscard]] RandomStream split(std::string_view label) const;
  /// Independent child stream identified by an index (customer, restart, rep).
  [[nodiscard]] RandomStream split(std::uint64_t index) const;

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound);

  [[nodiscard]] std::uint64_t key() const { return key_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Finalizer from splitmix64; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace mbseg
