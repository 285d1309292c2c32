#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

namespace tiltperm {

/// Reproducible random stream keyed by (master_seed, stream_id).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard, seeded through std::seed_seq (also fully specified). The
/// distributions below are implemented in-library rather than taken from
/// <random>, whose distribution algorithms are implementation-defined, so a
/// given key produces the same draws on every platform and compiler.
///
/// A stream is a single-owner sequential object: move it between threads,
/// never share one concurrently.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Raw 64-bit output.
  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer on [0, n); n > 0. Unbiased (rejection sampling).
  std::size_t index(std::size_t n);

  /// Standard normal (Marsaglia polar method).
  double normal();

  /// Standard exponential.
  double exponential();

  /// Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
  double gamma(double shape);

  /// In-place Fisher-Yates shuffle.
  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = index(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Child seed for a named component ("permtest.mc", "tail.sphere", ...).
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label) noexcept;

/// Child seed for a named component and an integer index (replicate, level).
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label,
                          std::uint64_t index) noexcept;

}  // namespace tiltperm
