#include "htree/rational.hpp"

#include <cctype>
#include <cmath>

#include "htree/error.hpp"

namespace htree {

std::string to_string(const Rational& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

std::string to_string(const BigInt& n) { return n.str(); }

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::string_view body = text;
  bool negative = false;
  if (!body.empty() && (body.front() == '-' || body.front() == '+')) {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  const auto slash = body.find('/');
  const std::string_view num_text = body.substr(0, slash);
  const std::string_view den_text =
      slash == std::string_view::npos ? std::string_view("1") : body.substr(slash + 1);
  if (!all_digits(num_text) || !all_digits(den_text)) {
    throw Error(ErrorCode::parse, "not a rational: '" + std::string(text) + "'");
  }
  const BigInt num{std::string(num_text)};
  const BigInt den{std::string(den_text)};
  if (den == 0) throw Error(ErrorCode::parse, "zero denominator: '" + std::string(text) + "'");
  Rational r(num, den);
  return negative ? Rational(-r) : r;
}

Rational rational_from_double(double x) {
  if (!std::isfinite(x)) {
    throw Error(ErrorCode::invalid_argument, "cannot represent a non-finite double exactly");
  }
  return Rational(x);
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

Rational pow(const Rational& base, std::uint64_t exponent) {
  Rational result = 1;
  Rational square = base;
  while (exponent > 0) {
    if (exponent & 1U) result *= square;
    exponent >>= 1U;
    if (exponent > 0) square *= square;
  }
  return result;
}

Rational round_up(const Rational& r, const BigInt& denominator) {
  const Rational scaled = r * denominator;
  BigInt q = boost::multiprecision::numerator(scaled) / boost::multiprecision::denominator(scaled);
  if (Rational(q) < scaled) q += 1;
  return Rational(q, denominator);
}

Rational round_down(const Rational& r, const BigInt& denominator) {
  const Rational scaled = r * denominator;
  BigInt q = boost::multiprecision::numerator(scaled) / boost::multiprecision::denominator(scaled);
  if (Rational(q) > scaled) q -= 1;
  return Rational(q, denominator);
}

}  // namespace htree
