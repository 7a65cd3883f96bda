#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace forge {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// 256-bit mantissa float for entropy and KL in exact mode. Error budget for
/// sums over <= 2^16 terms stays far below 2^-200.
using HighFloat = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<256, boost::multiprecision::digit_base_2>>;

inline Rational make_rational(std::int64_t num, std::int64_t den) { return Rational(num, den); }

inline Rational dyadic(const BigInt& numerator, unsigned log2_denominator) {
  return Rational(numerator, BigInt(1) << log2_denominator);
}

inline Rational abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

/// log2 of the denominator if it is a power of two.
inline std::optional<unsigned> dyadic_exponent(const Rational& r) {
  BigInt den = boost::multiprecision::denominator(r);
  if (den <= 0 || (den & (den - 1)) != 0) return std::nullopt;
  return static_cast<unsigned>(boost::multiprecision::msb(den));
}

inline HighFloat to_high(const Rational& r) {
  return HighFloat(boost::multiprecision::numerator(r)) /
         HighFloat(boost::multiprecision::denominator(r));
}

inline double to_double(const Rational& r) { return static_cast<double>(to_high(r)); }

inline std::string to_string(const Rational& r) { return r.str(); }

inline HighFloat high_log2(const HighFloat& x) {
  static const HighFloat kLn2 = boost::multiprecision::log(HighFloat(2));
  return boost::multiprecision::log(x) / kLn2;
}

/// Parses "a/b", "a" or a terminating decimal like "0.25" into an exact rational.
inline std::optional<Rational> parse_rational(const std::string& text) {
  if (text.empty()) return std::nullopt;
  try {
    if (auto slash = text.find('/'); slash != std::string::npos) {
      BigInt num(text.substr(0, slash));
      BigInt den(text.substr(slash + 1));
      if (den == 0) return std::nullopt;
      return Rational(num, den);
    }
    if (auto dot = text.find('.'); dot != std::string::npos) {
      std::string whole = text.substr(0, dot);
      std::string frac = text.substr(dot + 1);
      bool negative = !whole.empty() && whole[0] == '-';
      if (negative) whole = whole.substr(1);
      if (whole.empty()) whole = "0";
      if (frac.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
      BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(frac.size()));
      BigInt num = BigInt(whole) * scale + (frac.empty() ? BigInt(0) : BigInt(frac));
      Rational r(num, scale);
      return negative ? Rational(-r) : r;
    }
    return Rational(BigInt(text));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace forge
