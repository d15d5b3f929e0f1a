#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace floorlab {

/// Counter-based random stream.
///
/// A stream is identified by a 64-bit key; the i-th raw draw is a pure
/// function of (key, i), so a stream can be copied, forked by index, and
/// replayed without hidden global state. Streams are cheap values; give
/// each worker its own copy.
///
/// The bit mapping below is part of the reproducibility contract: outputs
/// must not change between versions.
class RngStream {
 public:
  using result_type = std::uint64_t;

  constexpr RngStream() = default;
  constexpr explicit RngStream(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1]; safe to pass to log().
  double uniform_open_zero();
  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal draw (Box-Muller, caching the second variate).
  double normal();

  void fill_normal(std::span<double> out, double sigma);

  /// Independent child stream; fork(i) never aliases the parent sequence.
  [[nodiscard]] RngStream fork(std::uint64_t index) const;

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t position() const { return counter_; }

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z);

/// FNV-1a over the label bytes.
std::uint64_t hash_label(std::string_view label);

/// Stream for (master seed, purpose label, index).
///
/// The key is mix64(seed ^ hash(label)) + mix64(index + C), a fixed
/// documented mapping; see README "Seeds and streams".
RngStream derive_stream(std::uint64_t master_seed, std::string_view purpose, std::uint64_t index);

/// In-place Fisher-Yates shuffle driven by `stream`.
template <typename T>
void shuffle(std::span<T> items, RngStream& stream) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(stream.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace floorlab
