#include "sgain/exact.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <array>
#include <charconv>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sgain {

namespace {

using Float50 = boost::multiprecision::cpp_bin_float_50;

Float50 to_float50(const Rational& q) {
  return Float50(boost::multiprecision::numerator(q)) / Float50(boost::multiprecision::denominator(q));
}

std::string format_float50(const Float50& x, int digits) {
  std::ostringstream os;
  os << std::setprecision(digits) << x;
  return os.str();
}

BigInt pow10(unsigned e) {
  BigInt r = 1;
  for (unsigned i = 0; i < e; ++i) r *= 10;
  return r;
}

Rational parse_decimal(std::string_view s, std::string_view original) {
  bool negative = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  long long exponent = 0;
  if (const auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    const auto exp_text = s.substr(e + 1);
    const auto* first = exp_text.data();
    const auto* last = first + exp_text.size();
    if (!exp_text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, exponent);
    if (ec != std::errc{} || ptr != last || first == last) {
      throw std::invalid_argument("malformed exponent in number '" + std::string(original) + "'");
    }
    s = s.substr(0, e);
  }
  std::string digits;
  long long fraction_digits = 0;
  bool seen_point = false;
  for (char c : s) {
    if (c == '.') {
      if (seen_point) throw std::invalid_argument("malformed number '" + std::string(original) + "'");
      seen_point = true;
    } else if (c >= '0' && c <= '9') {
      digits.push_back(c);
      if (seen_point) ++fraction_digits;
    } else {
      throw std::invalid_argument("malformed number '" + std::string(original) + "'");
    }
  }
  if (digits.empty()) throw std::invalid_argument("malformed number '" + std::string(original) + "'");
  // A leading zero would make the BigInt string constructor read octal.
  const auto nonzero = digits.find_first_not_of('0');
  const BigInt mantissa = nonzero == std::string::npos ? BigInt(0) : BigInt(digits.substr(nonzero));
  const long long scale = exponent - fraction_digits;
  Rational value = scale >= 0 ? Rational(mantissa * pow10(static_cast<unsigned>(scale)))
                              : Rational(mantissa, pow10(static_cast<unsigned>(-scale)));
  return negative ? Rational(-value) : value;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) throw std::invalid_argument("empty number");
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const Rational num = parse_decimal(text.substr(0, slash), text);
    const Rational den = parse_decimal(text.substr(slash + 1), text);
    if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
    return num / den;
  }
  return parse_decimal(text, text);
}

Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value cannot be made rational");
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw std::runtime_error("to_chars failed");
  return parse_rational(std::string_view(buf.data(), static_cast<std::size_t>(ptr - buf.data())));
}

Rational rational_upper_bound(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value cannot be bounded");
  const double up = std::nextafter(x, std::numeric_limits<double>::infinity());
  int exp2 = 0;
  const double mant = std::frexp(up, &exp2);
  // mant * 2^53 is an exact integer.
  const auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  Rational q(scaled);
  const int shift = exp2 - 53;
  if (shift >= 0) {
    q *= Rational(BigInt(1) << shift);
  } else {
    q /= Rational(BigInt(1) << (-shift));
  }
  return q;
}

double to_double(const Rational& q) { return q.convert_to<double>(); }

std::string to_fraction_string(const Rational& q) {
  const auto num = boost::multiprecision::numerator(q);
  const auto den = boost::multiprecision::denominator(q);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

std::string to_decimal_string(const Rational& q, int digits) { return format_float50(to_float50(q), digits); }

Rational pow(const Rational& base, unsigned exponent) {
  Rational r(1);
  Rational b = base;
  while (exponent > 0) {
    if (exponent & 1U) r *= b;
    b *= b;
    exponent >>= 1U;
  }
  return r;
}

Rational half_step_sqrt_ceiling(const Rational& square) {
  if (square < 0) throw std::invalid_argument("half_step_sqrt_ceiling: negative argument");
  // Start from a floating guess, then settle exactly.
  auto k = static_cast<long long>(std::ceil(2.0 * std::sqrt(to_double(square))));
  if (k < 0) k = 0;
  auto fits = [&](long long kk) { return Rational(kk * kk, 4) >= square; };
  while (k > 0 && fits(k - 1)) --k;
  while (!fits(k)) ++k;
  return Rational(k, 2);
}

RadicalNumber RadicalNumber::from_rational(Rational q) {
  RadicalNumber r;
  r.coeff = std::move(q);
  return r;
}

RadicalNumber RadicalNumber::upper_bound_of(double x) {
  RadicalNumber r;
  r.coeff = rational_upper_bound(x);
  r.exact = false;
  return r;
}

double RadicalNumber::value() const {
  if (is_rational()) return to_double(coeff);
  return to_double(coeff) * std::pow(to_double(base), 1.0 / static_cast<double>(root));
}

std::string RadicalNumber::decimal(int digits) const {
  if (is_rational()) return to_decimal_string(coeff, digits);
  const Float50 b = to_float50(base);
  const Float50 v = to_float50(coeff) * boost::multiprecision::pow(b, Float50(1) / Float50(root));
  return format_float50(v, digits);
}

std::string RadicalNumber::exact_string() const {
  if (is_rational()) return to_fraction_string(coeff);
  return "(" + to_fraction_string(coeff) + ")*(" + to_fraction_string(base) + ")^(1/" + std::to_string(root) + ")";
}

RadicalNumber RadicalNumber::scaled(const Rational& q) const {
  RadicalNumber r = *this;
  r.coeff *= q;
  return r;
}

bool RadicalNumber::less_than(const Rational& q) const {
  if (is_rational()) return coeff < q;
  if (q <= 0) return false;  // coeff, base >= 0
  return pow(coeff, root) * base < pow(q, root);
}

bool sqrt_plus_offset_negative(const Rational& square, const Rational& offset) {
  if (square < 0) throw std::invalid_argument("sqrt_plus_offset_negative: negative square");
  // sqrt(F) < -offset
  if (offset >= 0) return false;
  return square < offset * offset;
}

std::string sqrt_plus_offset_decimal(const Rational& square, const Rational& offset, int digits) {
  const Float50 v = boost::multiprecision::sqrt(to_float50(square)) + to_float50(offset);
  return format_float50(v, digits);
}

}  // namespace sgain
