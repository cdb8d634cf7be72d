#include "mrt/decimal.hpp"

#include <cctype>
#include <numeric>

#include "mrt/error.hpp"

namespace mrt {

Probability Probability::parse(std::string_view text) {
  auto fail = [&] {
    throw Error(ErrorCode::config_error,
                "not an exact decimal probability: '" + std::string(text) + "'");
  };
  if (text.empty()) fail();

  std::int64_t whole = 0;
  std::size_t i = 0;
  bool any_digit = false;
  for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
    whole = whole * 10 + (text[i] - '0');
    any_digit = true;
    if (whole > 1000) fail();
  }
  std::int64_t frac = 0;
  int frac_digits = 0;
  if (i < text.size() && text[i] == '.') {
    ++i;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
      if (frac_digits == 6) {
        // trailing zeros past micro precision are harmless
        if (text[i] != '0') fail();
        continue;
      }
      frac = frac * 10 + (text[i] - '0');
      ++frac_digits;
      any_digit = true;
    }
  }
  if (i != text.size() || !any_digit) fail();
  for (; frac_digits < 6; ++frac_digits) frac *= 10;
  return from_micros(whole * kScale + frac);
}

std::string Probability::to_string() const {
  std::string out = std::to_string(micros_ / kScale);
  std::int64_t frac = micros_ % kScale;
  if (micros_ < 0) return std::to_string(value());
  if (frac == 0) return out;
  std::string digits = std::to_string(frac);
  digits.insert(0, 6 - digits.size(), '0');
  while (!digits.empty() && digits.back() == '0') digits.pop_back();
  return out + "." + digits;
}

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw Error(ErrorCode::invalid_argument, "zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g == 0) g = 1;
  return Rational{num / g, den / g};
}

Rational operator+(const Rational& a, const Rational& b) {
  return Rational::make(a.num * b.den + b.num * a.den, a.den * b.den);
}

}  // namespace mrt
