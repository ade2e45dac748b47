#pragma once

#include <cstdint>
#include <initializer_list>

namespace contnash {

// Deterministic counter-based random stream. A stream is identified by a key
// folded from (seed, path of tags); draws are a pure function of (key, draw
// index). Copying a stream replays it from the copied position, and deriving
// a child does not consume or depend on the parent's draw position, so the
// same (seed, path) always yields the same sequence no matter in which order
// sibling streams are used.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed);

  // Substream for tag(s). Never advances or reads this stream's counter.
  RngStream child(std::uint64_t tag) const;
  RngStream child(std::uint64_t tag_a, std::uint64_t tag_b) const;

  std::uint64_t next_u64();
  // Uniform on [0, 1).
  double uniform();
  // Standard normal (Box-Muller, two uniforms per draw).
  double normal();

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// derive_stream(seed, tags...): root stream for `seed` descended through
// `tags`. Collision-resistant in the hash sense; distinctness is checked
// empirically in the test suite.
RngStream derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {});

// Fixed purpose tags so every consumer derives from a documented slot.
namespace rng_tag {
inline constexpr std::uint64_t kTrial = 1;
inline constexpr std::uint64_t kInit = 2;
inline constexpr std::uint64_t kTrain = 3;
inline constexpr std::uint64_t kEval = 4;
inline constexpr std::uint64_t kPlayer = 5;
inline constexpr std::uint64_t kOwnNoise = 6;
inline constexpr std::uint64_t kUtility = 7;
inline constexpr std::uint64_t kSmoothing = 8;
inline constexpr std::uint64_t kProfileDump = 9;
}  // namespace rng_tag

}  // namespace contnash
