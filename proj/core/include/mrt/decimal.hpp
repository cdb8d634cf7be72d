#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace mrt {

/// A probability held as an exact decimal: integer micro-units over 10^6.
/// Sums of protocol probabilities are compared exactly.
class Probability {
 public:
  static constexpr std::int64_t kScale = 1'000'000;

  constexpr Probability() = default;
  static constexpr Probability from_micros(std::int64_t micros) {
    Probability p;
    p.micros_ = micros;
    return p;
  }

  /// Parses "0.3", "1", ".25", "0.150000". More than six fractional digits,
  /// signs or exponents are rejected with a config_error.
  static Probability parse(std::string_view text);

  constexpr std::int64_t micros() const { return micros_; }
  constexpr double value() const {
    return static_cast<double>(micros_) / static_cast<double>(kScale);
  }
  constexpr bool in_unit_interval() const {
    return micros_ >= 0 && micros_ <= kScale;
  }

  /// Shortest decimal spelling ("0.3", "1", "0.15").
  std::string to_string() const;

  friend constexpr auto operator<=>(Probability, Probability) = default;

 private:
  std::int64_t micros_ = 0;
};

/// Reduced fraction with positive denominator.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  double to_double() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }

  friend Rational operator+(const Rational& a, const Rational& b);
  friend bool operator==(const Rational&, const Rational&) = default;
};

}  // namespace mrt
