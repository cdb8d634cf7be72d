#include <doctest.h>

#include <array>
#include <map>
#include <set>

#include "mrt/decimal.hpp"
#include "mrt/error.hpp"
#include "mrt/rng.hpp"

using namespace mrt;

// Golden values come from a separate Python implementation of the same key
// chain; splitmix64(0) is the published first output of splitmix64 seeded 0.
TEST_CASE("splitmix64 matches the reference generator") {
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
}

TEST_CASE("hash_key golden values") {
  CHECK(hash_key({0, 0, 0, 0, DrawPurpose::assignment}) == 0x78ae5a9a6b5fd45eULL);
  CHECK(uniform01({0, 0, 0, 0, DrawPurpose::assignment}) == 0.47141042966848024);
  CHECK(hash_key({42, 3, 1, 17, DrawPurpose::assignment}) == 0x91fd17f5a992276bULL);
  CHECK(uniform01({42, 3, 1, 17, DrawPurpose::assignment}) == 0.5702681517373738);
  CHECK(hash_key({7, 2, 0, 5, DrawPurpose::behavior}) == 0x8104698d167ce773ULL);
  CHECK(uniform01({7, 2, 0, 5, DrawPurpose::behavior}) == 0.5039735764935247);
  CHECK(derive_seed(42, 3) == 0xfa4f945599f9054aULL);
  static_assert(hash_key({0, 0, 0, 0, DrawPurpose::assignment}) == 0x78ae5a9a6b5fd45eULL);
}

TEST_CASE("KeyedEngine continues the splitmix64 sequence from the key hash") {
  KeyedEngine e({0, 0, 0, 0, DrawPurpose::assignment});
  CHECK(e() == 0xcbd37ad29b93b094ULL);
  CHECK(e() == 0x299469dd535aceffULL);
}

TEST_CASE("categorical golden draws over (0.3, 0.3, 0.4)") {
  const std::array probs{Probability::parse("0.3"), Probability::parse("0.3"), Probability::parse("0.4")};
  const std::map<std::uint64_t, std::array<int, 12>> expected = {
      {0, {1, 0, 2, 1, 1, 2, 0, 1, 1, 1, 2, 1}},
      {1, {0, 0, 2, 2, 2, 0, 2, 1, 1, 1, 0, 0}},
      {4, {1, 0, 1, 2, 1, 2, 2, 0, 2, 1, 0, 0}},
  };
  for (const auto& [seed, draws] : expected)
    for (std::uint64_t p = 0; p < draws.size(); ++p)
      CHECK(categorical({seed, p, 0, 0, DrawPurpose::assignment}, probs) ==
            static_cast<std::size_t>(draws[p]));
}

TEST_CASE("draws depend on every key coordinate") {
  const DrawKey base{11, 22, 33, 44, DrawPurpose::assignment};
  std::set<std::uint64_t> hashes{hash_key(base)};
  for (int coord = 0; coord < 5; ++coord) {
    DrawKey k = base;
    switch (coord) {
      case 0: k.trial_seed++; break;
      case 1: k.participant_index++; break;
      case 2: k.factor_index++; break;
      case 3: k.decision_index++; break;
      case 4: k.purpose = DrawPurpose::enrollment; break;
    }
    hashes.insert(hash_key(k));
  }
  CHECK(hashes.size() == 6);
}

TEST_CASE("categorical degenerate and boundary cases") {
  const std::array certain{Probability::parse("0"), Probability::parse("1")};
  for (std::uint64_t i = 0; i < 500; ++i)
    CHECK(categorical({9, i, 0, 0, DrawPurpose::assignment}, certain) == 1);
  const std::array first{Probability::parse("1"), Probability::parse("0")};
  for (std::uint64_t i = 0; i < 500; ++i)
    CHECK(categorical({9, i, 0, 0, DrawPurpose::assignment}, first) == 0);
}

TEST_CASE("categorical frequencies converge to the probabilities") {
  const std::array probs{Probability::parse("0.15"), Probability::parse("0.15"), Probability::parse("0.7")};
  std::array<int, 3> counts{};
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[categorical({5, static_cast<std::uint64_t>(i), 0, 0, DrawPurpose::assignment}, probs)];
  // Binomial sd at p=0.7, n=2e5 is about 0.001; allow 5 sd.
  CHECK(std::abs(counts[0] / double(n) - 0.15) < 0.005);
  CHECK(std::abs(counts[1] / double(n) - 0.15) < 0.005);
  CHECK(std::abs(counts[2] / double(n) - 0.70) < 0.005);
}

TEST_CASE("uniform01 stays in [0, 1)") {
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const double u = uniform01({i, i * 7, i * 13, i * 31, DrawPurpose::resample});
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("Probability parsing is exact to six places") {
  CHECK(Probability::parse("0.3").micros() == 300000);
  CHECK(Probability::parse("0.70").micros() == 700000);
  CHECK(Probability::parse("1").micros() == 1000000);
  CHECK(Probability::parse("0.000001").micros() == 1);
  CHECK(Probability::parse("0.3").to_string() == "0.3");
  CHECK(Probability::parse(".25").micros() + Probability::parse("0.750000").micros() == Probability::kScale);
  CHECK_THROWS_AS(Probability::parse("0.1234567"), Error);
  CHECK_THROWS_AS(Probability::parse("abc"), Error);
  CHECK_FALSE(Probability::parse("1.5").in_unit_interval());
}

TEST_CASE("Rational arithmetic reduces") {
  const Rational r = Rational::make(6, 4);
  CHECK(r.num == 3);
  CHECK(r.den == 2);
  CHECK(r + Rational::make(1, 2) == Rational::make(2, 1));
  CHECK(r.to_double() == 1.5);
}
