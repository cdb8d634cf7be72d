#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>

#include "mrt/decimal.hpp"

namespace mrt {

/// Discriminates independent families of draws that share coordinates.
enum class DrawPurpose : std::uint64_t {
  assignment = 0,
  behavior = 1,
  enrollment = 2,
  resample = 3,
};

/// Coordinates of one random draw. The draw is a pure function of the key,
/// so skipping a decision point never perturbs any other draw.
struct DrawKey {
  std::uint64_t trial_seed = 0;
  std::uint64_t participant_index = 0;
  std::uint64_t factor_index = 0;
  std::uint64_t decision_index = 0;
  DrawPurpose purpose = DrawPurpose::assignment;
};

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// splitmix64 output function: add the golden gamma, then the xor-shift-
/// multiply finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + kGoldenGamma;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Packs the key by chaining splitmix64 over
/// (trial_seed, purpose, participant, factor, decision):
///   h = sm(seed); h = sm(h ^ purpose); h = sm(h ^ participant);
///   h = sm(h ^ factor); h = sm(h ^ decision)
constexpr std::uint64_t hash_key(const DrawKey& key) {
  std::uint64_t h = splitmix64(key.trial_seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(key.purpose));
  h = splitmix64(h ^ key.participant_index);
  h = splitmix64(h ^ key.factor_index);
  h = splitmix64(h ^ key.decision_index);
  return h;
}

/// The 53 high bits of hash_key scaled to [0, 1). Bit-exact everywhere.
constexpr double uniform01(const DrawKey& key) {
  return static_cast<double>(hash_key(key) >> 11) * 0x1.0p-53;
}

/// Inverse CDF over the exact cumulative decimal probabilities: the smallest
/// i with u < cumsum(i). Comparison is done in integers, so it is exact.
std::size_t categorical(const DrawKey& key, std::span<const Probability> probabilities);

/// Bernoulli(p) from a keyed uniform.
inline bool bernoulli(const DrawKey& key, double p) { return uniform01(key) < p; }

/// Seed for replication `index` of a trial seeded with `trial_seed`.
constexpr std::uint64_t derive_seed(std::uint64_t trial_seed, std::uint64_t index) {
  return splitmix64(splitmix64(trial_seed) ^ index);
}

/// A splitmix64 sequence seeded by a key's hash; satisfies
/// UniformRandomBitGenerator so standard distributions can consume it when
/// one draw needs several uniforms.
class KeyedEngine {
 public:
  using result_type = std::uint64_t;

  explicit KeyedEngine(const DrawKey& key) : state_(hash_key(key)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += kGoldenGamma;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace mrt
