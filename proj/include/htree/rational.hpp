#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/gmp.hpp>

namespace htree {

using BigInt = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                             boost::multiprecision::et_off>;
using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;

using Height = std::int64_t;

/// Lossless "p/q" form; integers print without a denominator.
std::string to_string(const Rational& r);
std::string to_string(const BigInt& n);

/// Accepts "p", "p/q" (optionally signed). Throws Error(ErrorCode::parse) otherwise.
Rational parse_rational(std::string_view text);

/// Exact binary value of a finite double.
Rational rational_from_double(double x);

double to_double(const Rational& r);

Rational pow(const Rational& base, std::uint64_t exponent);

/// Round a positive rational up/down to a multiple of 1/denominator.
Rational round_up(const Rational& r, const BigInt& denominator);
Rational round_down(const Rational& r, const BigInt& denominator);

}  // namespace htree
