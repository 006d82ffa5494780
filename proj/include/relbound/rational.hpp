#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace relbound {

/// Exact rational in lowest terms (denominator > 0).
using Rational = mpq_class;

/// "p/q" with q > 0, always including the denominator ("0/1", "1/1").
std::string to_string(const Rational& r);
/// Accepts "p/q", an integer "p" or a finite decimal "0.99"; the result is canonicalized.
Rational parse_rational(std::string_view text);

/// p/q in lowest terms. (mpq_class's two-argument constructor does not reduce.)
inline Rational make_rational(long p, long q) {
  Rational r(p, q);
  r.canonicalize();
  return r;
}

inline Rational abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

}  // namespace relbound
