#pragma once

#include <string>

#include "qie/rational.hpp"

namespace qie {

/// Working precision defaults for truncated p-adic arithmetic: scalars carry
/// their own significant-digit count; results dropping below the floor are
/// rejected loudly rather than silently rounded.
constexpr int kPadicDefaultPrecision = 24;
constexpr int kPadicMinPrecision = 8;

/// Valuation certificate used for (apparent) zeros: "the value is divisible
/// by p^val as far as the digits show". Exact zeros use kPadicInfinity.
constexpr long kPadicInfinity = 1L << 50;

/// A truncated element of Q_p: value = p^val * unit with the unit coprime to
/// p and known modulo p^prec. A zero sentinel records only the certificate
/// "valuation >= val".
struct PadicScalar {
  long prime = 2;
  bool zero = true;
  long val = kPadicInfinity;
  Int unit = 0;
  int prec = kPadicDefaultPrecision;
};

Int int_pow(long p, long e);
/// v_p of a plain integer; returns cap when x vanishes mod p^cap.
long int_valuation(const Int& x, long p, long cap);
Int mod_inverse(const Int& u, long p, int prec);

PadicScalar padic_zero(long p, long known_val = kPadicInfinity);
PadicScalar padic_from_integer(long p, const Int& x, int prec = kPadicDefaultPrecision);
PadicScalar padic_from_rational(long p, const Int& num, const Int& den,
                                int prec = kPadicDefaultPrecision);
/// num / p^den_exp — the form boundary points of the tree charts come in.
PadicScalar padic_dyadic(long p, const Int& num, long den_exp,
                         int prec = kPadicDefaultPrecision);

bool padic_is_zero(const PadicScalar& a);
/// Valuation, or the zero certificate for sentinels.
long padic_valuation(const PadicScalar& a);

PadicScalar padic_add(const PadicScalar& a, const PadicScalar& b);
PadicScalar padic_neg(const PadicScalar& a);
PadicScalar padic_sub(const PadicScalar& a, const PadicScalar& b);
PadicScalar padic_mul(const PadicScalar& a, const PadicScalar& b);
PadicScalar padic_inv(const PadicScalar& a);
PadicScalar padic_div(const PadicScalar& a, const PadicScalar& b);
PadicScalar padic_shift(const PadicScalar& a, long k);  // multiply by p^k

/// Equality of the overlapping digit windows.
bool padic_eq(const PadicScalar& a, const PadicScalar& b);

/// The value reduced mod p^m (requires valuation >= 0 and enough digits).
Int padic_residue(const PadicScalar& a, long m);

std::string padic_to_string(const PadicScalar& a);

}  // namespace qie
