#include "relbound/rational.hpp"

#include "relbound/errors.hpp"

namespace relbound {

std::string to_string(const Rational& r) { return r.get_num().get_str() + "/" + r.get_den().get_str(); }

Rational parse_rational(std::string_view text) {
  const std::string s(text);
  const auto slash = s.find('/');
  const auto dot = s.find('.');
  if (dot != std::string::npos && slash == std::string::npos) {
    // Finite decimal "x.yyy" read exactly.
    const std::string frac = s.substr(dot + 1);
    if (frac.empty() || frac.find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("malformed rational \"" + s + "\"");
    }
    const std::string whole = s.substr(0, dot);
    const bool negative = !whole.empty() && whole[0] == '-';
    Rational r = parse_rational(whole.empty() || whole == "-" ? whole + "0" : whole);
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, frac.size());
    Rational f(mpz_class(frac, 10), den);
    f.canonicalize();
    r = negative ? Rational(r - f) : Rational(r + f);
    return r;
  }
  mpz_class num;
  mpz_class den(1);
  try {
    if (slash == std::string::npos) {
      num = mpz_class(s, 10);
    } else {
      num = mpz_class(s.substr(0, slash), 10);
      den = mpz_class(s.substr(slash + 1), 10);
    }
  } catch (const std::invalid_argument&) {
    throw UsageError("malformed rational \"" + s + "\"");
  }
  if (den == 0) throw UsageError("zero denominator in \"" + s + "\"");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

}  // namespace relbound
