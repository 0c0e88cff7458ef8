#include "qie/padic.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace qie {

namespace {

void require_same_prime(const PadicScalar& a, const PadicScalar& b) {
  if (a.prime != b.prime) {
    throw std::invalid_argument("p-adic scalars have mismatched primes " +
                                std::to_string(a.prime) + " and " +
                                std::to_string(b.prime));
  }
}

void require_prime(long p) {
  if (p < 2) {
    throw std::invalid_argument("p-adic prime must be at least 2, got " + std::to_string(p));
  }
}

PadicScalar make_nonzero(long p, long val, Int unit, int prec) {
  if (prec < kPadicMinPrecision) {
    throw std::runtime_error(
        "p-adic precision exhausted: result would carry " + std::to_string(prec) +
        " significant digits, below the floor of " + std::to_string(kPadicMinPrecision) +
        "; restart the computation with a larger working precision");
  }
  PadicScalar out;
  out.prime = p;
  out.zero = false;
  out.val = val;
  out.prec = prec;
  Int mod = int_pow(p, prec);
  unit %= mod;
  if (unit < 0) unit += mod;
  out.unit = unit;
  return out;
}

/// Normalize a raw digit window: value = p^base_val * raw with raw known mod
/// p^window. Strips p-powers out of raw into the valuation.
PadicScalar normalize_window(long p, long base_val, Int raw, long window) {
  if (window <= 0) {
    throw std::runtime_error(
        "p-adic precision exhausted: no overlapping digit window remains; "
        "restart the computation with a larger working precision");
  }
  Int mod = int_pow(p, window);
  raw %= mod;
  if (raw < 0) raw += mod;
  if (raw == 0) {
    return padic_zero(p, base_val + window);
  }
  long k = int_valuation(raw, p, window);
  Int unit = raw / int_pow(p, k);
  long prec = window - k;
  if (prec > 4096) prec = 4096;
  return make_nonzero(p, base_val + k, unit, static_cast<int>(prec));
}

}  // namespace

Int int_pow(long p, long e) {
  if (e < 0) throw std::invalid_argument("int_pow wants a nonnegative exponent");
  Int out = 1;
  Int base = p;
  long k = e;
  while (k > 0) {
    if (k & 1) out *= base;
    base *= base;
    k >>= 1;
  }
  return out;
}

long int_valuation(const Int& x, long p, long cap) {
  if (x == 0) return cap;
  Int t = x;
  long v = 0;
  while (v < cap && t % p == 0) {
    t /= p;
    ++v;
  }
  return v;
}

Int mod_inverse(const Int& u, long p, int prec) {
  Int mod = int_pow(p, prec);
  Int r0 = mod, r1 = u % mod;
  if (r1 < 0) r1 += mod;
  if (r1 == 0 || r1 % p == 0) {
    throw std::invalid_argument("mod_inverse wants an argument coprime to p");
  }
  Int s0 = 0, s1 = 1;
  while (r1 != 0) {
    Int q = r0 / r1;
    Int r2 = r0 - q * r1;
    Int s2 = s0 - q * s1;
    r0 = r1;
    r1 = r2;
    s0 = s1;
    s1 = s2;
  }
  s0 %= mod;
  if (s0 < 0) s0 += mod;
  return s0;
}

PadicScalar padic_zero(long p, long known_val) {
  require_prime(p);
  PadicScalar out;
  out.prime = p;
  out.zero = true;
  out.val = std::min(known_val, kPadicInfinity);
  out.unit = 0;
  out.prec = kPadicDefaultPrecision;
  return out;
}

PadicScalar padic_from_integer(long p, const Int& x, int prec) {
  require_prime(p);
  if (x == 0) return padic_zero(p);
  long v = int_valuation(x, p, kPadicInfinity);
  Int unit = x / int_pow(p, v);
  return make_nonzero(p, v, unit, prec);
}

PadicScalar padic_from_rational(long p, const Int& num, const Int& den, int prec) {
  require_prime(p);
  if (den == 0) throw std::invalid_argument("p-adic rational wants a nonzero denominator");
  if (num == 0) return padic_zero(p);
  long vn = int_valuation(num, p, kPadicInfinity);
  long vd = int_valuation(den, p, kPadicInfinity);
  Int un = num / int_pow(p, vn);
  Int ud = den / int_pow(p, vd);
  Int mod = int_pow(p, prec);
  Int unit = (un % mod) * mod_inverse(ud, p, prec) % mod;
  return make_nonzero(p, vn - vd, unit, prec);
}

PadicScalar padic_dyadic(long p, const Int& num, long den_exp, int prec) {
  PadicScalar out = padic_from_integer(p, num, prec);
  return padic_shift(out, -den_exp);
}

bool padic_is_zero(const PadicScalar& a) { return a.zero; }

long padic_valuation(const PadicScalar& a) { return a.val; }

PadicScalar padic_add(const PadicScalar& a, const PadicScalar& b) {
  require_same_prime(a, b);
  long p = a.prime;
  if (a.zero && b.zero) return padic_zero(p, std::min(a.val, b.val));
  if (a.zero || b.zero) {
    const PadicScalar& z = a.zero ? a : b;
    const PadicScalar& x = a.zero ? b : a;
    if (z.val >= x.val + x.prec) return x;
    if (z.val <= x.val) return padic_zero(p, z.val);
    long window = z.val - x.val;
    return normalize_window(p, x.val, x.unit, window);
  }
  long v = std::min(a.val, b.val);
  long abs_prec = std::min(a.val + a.prec, b.val + b.prec);
  long window = abs_prec - v;
  Int raw = a.unit * int_pow(p, a.val - v) + b.unit * int_pow(p, b.val - v);
  return normalize_window(p, v, raw, window);
}

PadicScalar padic_neg(const PadicScalar& a) {
  if (a.zero) return a;
  PadicScalar out = a;
  Int mod = int_pow(a.prime, a.prec);
  out.unit = (mod - a.unit % mod) % mod;
  return out;
}

PadicScalar padic_sub(const PadicScalar& a, const PadicScalar& b) {
  return padic_add(a, padic_neg(b));
}

PadicScalar padic_mul(const PadicScalar& a, const PadicScalar& b) {
  require_same_prime(a, b);
  long p = a.prime;
  if (a.zero || b.zero) {
    long cert = std::min(a.val + b.val, kPadicInfinity);
    return padic_zero(p, cert);
  }
  int prec = std::min(a.prec, b.prec);
  Int mod = int_pow(p, prec);
  Int unit = (a.unit % mod) * (b.unit % mod) % mod;
  return make_nonzero(p, a.val + b.val, unit, prec);
}

PadicScalar padic_inv(const PadicScalar& a) {
  if (a.zero) {
    throw std::invalid_argument("cannot invert a p-adic zero (or a value that vanishes "
                                "at the working precision)");
  }
  return make_nonzero(a.prime, -a.val, mod_inverse(a.unit, a.prime, a.prec), a.prec);
}

PadicScalar padic_div(const PadicScalar& a, const PadicScalar& b) {
  return padic_mul(a, padic_inv(b));
}

PadicScalar padic_shift(const PadicScalar& a, long k) {
  PadicScalar out = a;
  if (out.zero) {
    out.val = std::min(out.val + k, kPadicInfinity);
  } else {
    out.val += k;
  }
  return out;
}

bool padic_eq(const PadicScalar& a, const PadicScalar& b) {
  require_same_prime(a, b);
  // Two scalars are equal when no difference is visible inside the digit
  // window certified for both.  This never consumes precision, so it cannot
  // trip the significance floor the arithmetic routines enforce.
  long abs_a = a.zero ? a.val : a.val + a.prec;
  long abs_b = b.zero ? b.val : b.val + b.prec;
  long window = std::min(abs_a, abs_b);
  if (a.zero && b.zero) return true;
  if (a.zero != b.zero) {
    const PadicScalar& nz = a.zero ? b : a;
    return nz.val >= window;
  }
  if (a.val != b.val) return std::min(a.val, b.val) >= window;
  long digits = window - a.val;
  if (digits <= 0) return true;
  Int mod = int_pow(a.prime, digits);
  return a.unit % mod == b.unit % mod;
}

Int padic_residue(const PadicScalar& a, long m) {
  if (m <= 0) return 0;
  if (a.zero) {
    if (a.val < m) {
      throw std::runtime_error("p-adic residue beyond the zero certificate; "
                               "increase the working precision");
    }
    return 0;
  }
  if (a.val < 0) {
    throw std::invalid_argument("p-adic residue wants a p-adic integer, got valuation " +
                                std::to_string(a.val));
  }
  if (a.val + a.prec < m) {
    throw std::runtime_error(
        "p-adic residue needs " + std::to_string(m) + " digits but only " +
        std::to_string(a.val + a.prec) + " are certified; increase the working precision");
  }
  Int mod = int_pow(a.prime, m);
  return a.unit % mod * int_pow(a.prime, a.val) % mod;
}

std::string padic_to_string(const PadicScalar& a) {
  std::ostringstream os;
  if (a.zero) {
    os << "0(val>=" << a.val << ")";
    return os.str();
  }
  os << a.prime << "^" << a.val << "*" << a.unit.str() << "(mod " << a.prime << "^" << a.prec
     << ")";
  return os.str();
}

}  // namespace qie
