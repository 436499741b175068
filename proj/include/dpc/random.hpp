#pragma once

#include <cstdint>
#include <random>

namespace dpc {

/// Seeded random stream that splits into independent substreams.
///
/// A substream is a pure function of (parent key, child key), so a Monte-Carlo
/// sample indexed by i always sees the same numbers no matter which thread
/// draws it or in what order.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  RandomStream substream(std::uint64_t key) const;

  /// Standard normal draw.
  double normal();
  /// Uniform on the open interval (0, 1).
  double uniform();

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix64(std::uint64_t x);

/// Named substream keys so that purposes never collide.
namespace stream_key {
inline constexpr std::uint64_t kOuter = 0x6f75746572ULL;
inline constexpr std::uint64_t kInner = 0x696e6e6572ULL;
inline constexpr std::uint64_t kPolicy = 0x706f6c696379ULL;
inline constexpr std::uint64_t kSolverBatch = 0x6261746368ULL;
}  // namespace stream_key

}  // namespace dpc
