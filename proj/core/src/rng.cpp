#include "mrt/rng.hpp"

#include "mrt/error.hpp"

namespace mrt {

std::size_t categorical(const DrawKey& key, std::span<const Probability> probabilities) {
  if (probabilities.empty())
    throw Error(ErrorCode::invalid_argument, "categorical draw over no levels");
  // u = r / 2^53 and u < c / 10^6  <=>  r * 10^6 < c * 2^53
  const unsigned __int128 r = hash_key(key) >> 11;
  const unsigned __int128 lhs = r * static_cast<unsigned __int128>(Probability::kScale);
  std::int64_t cumulative = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    cumulative += probabilities[i].micros();
    if (cumulative <= 0) continue;
    const unsigned __int128 rhs = static_cast<unsigned __int128>(cumulative) << 53;
    if (lhs < rhs) return i;
  }
  // Unreachable for validated probabilities (sum exactly one).
  return probabilities.size() - 1;
}

}  // namespace mrt
