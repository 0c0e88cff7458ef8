#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace qie {

using Int = boost::multiprecision::cpp_int;
// Canonical lowest terms with positive denominator is maintained by the backend.
using Rational = boost::multiprecision::cpp_rational;

/// Parses "a/b" or "a" with optional sign; rejects zero denominators and junk.
Rational parse_rational(const std::string& text);

/// Formats as "a" or "a/b" with b > 1; inverse of parse_rational.
std::string format_rational(const Rational& q);

double to_double(const Rational& q);

using RatVec = std::vector<Rational>;
using RatMat = std::vector<RatVec>;  // row major, rectangular

}  // namespace qie
