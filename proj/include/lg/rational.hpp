#pragma once

// Exact rational arithmetic used wherever the toolkit promises exactness:
// canonical flows, specialities, filter survival masses, and the exponent
// calculus. Backed by boost::multiprecision so binomials like C(21,10) and
// masses like (1/2)^21 never overflow.

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>

#include "lg/errors.hpp"

namespace lg {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

inline Rational rational_pow(const Rational& base, long exp) {
  if (exp == 0) return Rational(1);
  if (base == 0 && exp < 0) throw Error(Fault::validation, "rational_pow: 0 to a negative power");
  Rational acc(1);
  Rational b = exp > 0 ? base : Rational(1) / base;
  for (long k = exp > 0 ? exp : -exp; k > 0; --k) acc *= b;
  return acc;
}

inline BigInt big_binomial(long n, long k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  BigInt num(1), den(1);
  for (long i = 0; i < k; ++i) {
    num *= n - i;
    den *= i + 1;
  }
  return num / den;
}

// "p/q" or "p"; also accepts a plain decimal like "0.5" (exact binary-free
// reading: digits after the point become a power-of-ten denominator).
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  try {
    auto slash = s.find('/');
    if (slash != std::string::npos) {
      BigInt num(s.substr(0, slash));
      BigInt den(s.substr(slash + 1));
      if (den == 0) throw Error(Fault::validation, "rational: zero denominator in '" + s + "'");
      return Rational(num, den);
    }
    auto dot = s.find('.');
    if (dot != std::string::npos) {
      std::string digits = s.substr(0, dot) + s.substr(dot + 1);
      BigInt den(1);
      for (std::size_t i = dot + 1; i < s.size(); ++i) den *= 10;
      return Rational(BigInt(digits), den);
    }
    return Rational(BigInt(s));
  } catch (const std::exception&) {
    throw Error(Fault::validation, "cannot parse rational '" + s + "'");
  }
}

inline std::string rational_str(const Rational& q) {
  BigInt num = boost::multiprecision::numerator(q);
  BigInt den = boost::multiprecision::denominator(q);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

} // namespace lg
