#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace sgain {

// Expression templates are off so results compose with std::min/max and auto.
using BigInt = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>, boost::multiprecision::et_off>;
using Rational =
    boost::multiprecision::number<boost::multiprecision::rational_adaptor<boost::multiprecision::cpp_int_backend<>>,
                                  boost::multiprecision::et_off>;

/// Parses "p/q", integers and decimal/scientific literals ("0.1", "-2.5e-3")
/// into an exact rational. Throws std::invalid_argument on malformed input.
Rational parse_rational(std::string_view text);

/// Exact rational of the shortest decimal that round-trips to `x`, so a
/// config value written as 0.1 becomes 1/10 rather than the binary fraction.
Rational rational_from_double(double x);

/// Exact binary value of a double, rounded one ulp upward first. Used when a
/// floating quantity enters a certificate and must never be understated.
Rational rational_upper_bound(double x);

double to_double(const Rational& q);

/// "p/q", or "p" when the denominator is 1.
std::string to_fraction_string(const Rational& q);

/// Decimal rendering with the given number of significant digits.
std::string to_decimal_string(const Rational& q, int digits = 30);

Rational pow(const Rational& base, unsigned exponent);

/// Smallest multiple of 1/2 whose square is >= `square` (square >= 0).
Rational half_step_sqrt_ceiling(const Rational& square);

/// A positive real of the form coeff * base^(1/root).
///
/// Closed-form derivative bounds of Hill-type feedbacks and the gain constants
/// built from them have this shape, and comparisons against rationals can be
/// decided exactly by raising both sides to the power `root`.
struct RadicalNumber {
  Rational coeff{0};
  Rational base{1};
  unsigned root = 1;
  /// False when the value came from floating evaluation (then it is an upper
  /// bound rounded away from zero rather than an exact value).
  bool exact = true;

  static RadicalNumber from_rational(Rational q);
  static RadicalNumber upper_bound_of(double x);

  [[nodiscard]] double value() const;
  [[nodiscard]] std::string decimal(int digits = 30) const;
  /// "p/q" for rationals, "(p/q)*(r/s)^(1/k)" otherwise.
  [[nodiscard]] std::string exact_string() const;
  [[nodiscard]] bool is_rational() const { return root == 1 || base == 1 || coeff == 0; }

  /// this * q for rational q >= 0.
  [[nodiscard]] RadicalNumber scaled(const Rational& q) const;
  /// Exact test of this < q.
  [[nodiscard]] bool less_than(const Rational& q) const;
};

/// Exact sign test for sqrt(square) + offset < 0 (square >= 0).
bool sqrt_plus_offset_negative(const Rational& square, const Rational& offset);

/// Decimal value of sqrt(square) + offset at 50-digit precision.
std::string sqrt_plus_offset_decimal(const Rational& square, const Rational& offset, int digits = 30);

}  // namespace sgain
