#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>

namespace nmetro {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Independent stream families. Each Monte Carlo routine keys its streams by
// (family, sub-index, trial) so results never depend on scheduling.
enum class StreamFamily : std::uint32_t {
  BbcEstimate = 1,
  ChoiceEstimate = 2,
  Deadline = 3,
  Adhoc = 4,
};

/// Counter-based random stream. Output block b of stream (seed, hi, lo) is
/// philox(counter = {b, lo.low, lo.high, hi}, key = seed). Satisfies
/// UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint32_t stream_hi,
               std::uint64_t stream_lo);

  static RandomStream keyed(std::uint64_t seed, StreamFamily family,
                            std::uint32_t sub, std::uint64_t trial);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> buffer_{};
  int next_ = 4;
  std::optional<double> spare_normal_;
};

}  // namespace nmetro
