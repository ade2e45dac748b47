#include "contnash/rng.h"

#include <cmath>
#include <numbers>

namespace contnash {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kChildSalt = 0xD1B54A32D192ED03ULL;

// SplitMix64 finalizer; bijective 64-bit mix.
std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t fold(std::uint64_t key, std::uint64_t tag) {
  return mix64(key ^ mix64(tag * kGolden + kChildSalt));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : key_(mix64(seed + kGolden)) {}

RngStream RngStream::child(std::uint64_t tag) const {
  RngStream s;
  s.key_ = fold(key_, tag);
  return s;
}

RngStream RngStream::child(std::uint64_t tag_a, std::uint64_t tag_b) const {
  return child(tag_a).child(tag_b);
}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  RngStream s(seed);
  for (std::uint64_t t : tags) s = s.child(t);
  return s;
}

}  // namespace contnash
