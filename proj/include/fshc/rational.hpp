#pragma once

#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "fshc/error.hpp"

namespace fshc {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Parses "p/q", "p" or "-p/q". Whitespace is not accepted.
inline Rational parse_rational(const std::string& text) {
  auto fail = [&] { throw Error(ErrorCode::ParseError, "not a rational \"p/q\": '" + text + "'"); };
  if (text.empty()) fail();
  auto valid_int = [](const std::string& s) {
    std::size_t i = (!s.empty() && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i)
      if (s[i] < '0' || s[i] > '9') return false;
    return true;
  };
  const auto slash = text.find('/');
  const std::string num = text.substr(0, slash);
  const std::string den = slash == std::string::npos ? "1" : text.substr(slash + 1);
  if (!valid_int(num) || !valid_int(den) || den[0] == '-' || den[0] == '+') fail();
  BigInt n(num[0] == '+' ? num.substr(1) : num);
  BigInt d(den);
  if (d == 0) fail();
  return Rational(n, d);
}

inline std::string to_string(const Rational& r) {
  const BigInt n = boost::multiprecision::numerator(r);
  const BigInt d = boost::multiprecision::denominator(r);
  return d == 1 ? n.str() : n.str() + "/" + d.str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline Rational rational_pow(const Rational& base, unsigned exponent) {
  Rational result = 1;
  Rational b = base;
  while (exponent) {
    if (exponent & 1u) result *= b;
    b *= b;
    exponent >>= 1u;
  }
  return result;
}

}  // namespace fshc
