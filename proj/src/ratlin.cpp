#include "qie/ratlin.hpp"

#include <algorithm>

namespace qie {

RatMat rat_identity(std::size_t n) {
  RatMat m(n, RatVec(n, 0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}

RatMat rat_zeros(std::size_t rows, std::size_t cols) { return RatMat(rows, RatVec(cols, 0)); }

RatMat rat_transpose(const RatMat& m) {
  if (m.empty()) return {};
  RatMat t(m[0].size(), RatVec(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j) t[j][i] = m[i][j];
  return t;
}

RatMat rat_mul(const RatMat& a, const RatMat& b) {
  const std::size_t n = a.size(), k = b.size(), p = b.empty() ? 0 : b[0].size();
  RatMat c(n, RatVec(p, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < k; ++t) {
      if (a[i][t] == 0) continue;
      for (std::size_t j = 0; j < p; ++j) c[i][j] += a[i][t] * b[t][j];
    }
  return c;
}

RatVec rat_apply(const RatMat& m, const RatVec& v) {
  RatVec out(m.size(), 0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j)
      if (m[i][j] != 0) out[i] += m[i][j] * v[j];
  return out;
}

RatMat rat_scale(const RatMat& m, const Rational& c) {
  RatMat out = m;
  for (auto& row : out)
    for (auto& x : row) x *= c;
  return out;
}

bool rat_is_zero_vec(const RatVec& v) {
  return std::all_of(v.begin(), v.end(), [](const Rational& x) { return x == 0; });
}

Rational rat_det(RatMat m) {
  const std::size_t n = m.size();
  Rational det = 1;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && m[piv][col] == 0) ++piv;
    if (piv == n) return 0;
    if (piv != col) {
      std::swap(m[piv], m[col]);
      det = -det;
    }
    det *= m[col][col];
    const Rational inv = Rational(1) / m[col][col];
    for (std::size_t r = col + 1; r < n; ++r) {
      if (m[r][col] == 0) continue;
      const Rational f = m[r][col] * inv;
      for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
    }
  }
  return det;
}

std::optional<RatMat> rat_inverse(const RatMat& m) {
  const std::size_t n = m.size();
  RatMat a = m;
  RatMat inv = rat_identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && a[piv][col] == 0) ++piv;
    if (piv == n) return std::nullopt;
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    const Rational f = Rational(1) / a[col][col];
    for (std::size_t c = 0; c < n; ++c) {
      a[col][c] *= f;
      inv[col][c] *= f;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      const Rational g = a[r][col];
      for (std::size_t c = 0; c < n; ++c) {
        a[r][c] -= g * a[col][c];
        inv[r][c] -= g * inv[col][c];
      }
    }
  }
  return inv;
}

Rref rat_rref(RatMat m) {
  Rref out;
  if (m.empty()) return out;
  const std::size_t cols = m[0].size();
  std::size_t row = 0;
  for (std::size_t col = 0; col < cols && row < m.size(); ++col) {
    std::size_t piv = row;
    while (piv < m.size() && m[piv][col] == 0) ++piv;
    if (piv == m.size()) continue;
    std::swap(m[piv], m[row]);
    const Rational f = Rational(1) / m[row][col];
    for (std::size_t c = col; c < cols; ++c) m[row][c] *= f;
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (r == row || m[r][col] == 0) continue;
      const Rational g = m[r][col];
      for (std::size_t c = col; c < cols; ++c) m[r][c] -= g * m[row][c];
    }
    out.pivots.push_back(col);
    ++row;
  }
  m.resize(row);
  out.mat = std::move(m);
  out.rank = row;
  return out;
}

std::size_t rat_rank(const RatMat& m) { return rat_rref(m).rank; }

std::vector<RatVec> rat_nullspace(const RatMat& m, std::size_t cols) {
  const Rref r = rat_rref(m);
  std::vector<bool> is_pivot(cols, false);
  for (auto p : r.pivots) is_pivot[p] = true;
  std::vector<RatVec> basis;
  for (std::size_t free = 0; free < cols; ++free) {
    if (is_pivot[free]) continue;
    RatVec v(cols, 0);
    v[free] = 1;
    for (std::size_t i = 0; i < r.rank; ++i) v[r.pivots[i]] = -r.mat[i][free];
    basis.push_back(std::move(v));
  }
  return basis;
}

bool rat_in_rowspan(const Rref& basis, const RatVec& v) {
  RatVec res = v;
  for (std::size_t i = 0; i < basis.rank; ++i) {
    const Rational c = res[basis.pivots[i]];
    if (c == 0) continue;
    for (std::size_t j = 0; j < res.size(); ++j) res[j] -= c * basis.mat[i][j];
  }
  return rat_is_zero_vec(res);
}

Rational rat_dot(const RatVec& a, const RatVec& b) {
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != 0 && b[i] != 0) s += a[i] * b[i];
  return s;
}

std::optional<RatVec> rat_solve(const RatMat& a, const RatVec& b) {
  const std::size_t cols = a.empty() ? 0 : a[0].size();
  RatMat aug = a;
  for (std::size_t i = 0; i < aug.size(); ++i) aug[i].push_back(b[i]);
  const Rref r = rat_rref(std::move(aug));
  RatVec x(cols, 0);
  for (std::size_t i = 0; i < r.rank; ++i) {
    if (r.pivots[i] == cols) return std::nullopt;  // 0 = 1 row
    x[r.pivots[i]] = r.mat[i][cols];
  }
  return x;
}

std::vector<Int> primitive_integer(const RatVec& v) {
  Int lcm_den = 1;
  for (const auto& q : v) lcm_den = boost::multiprecision::lcm(lcm_den, denominator(q));
  std::vector<Int> w(v.size());
  Int g = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    w[i] = numerator(v[i]) * (lcm_den / denominator(v[i]));
    g = boost::multiprecision::gcd(g, w[i]);
  }
  if (g == 0) throw std::invalid_argument("zero vector has no primitive form");
  int lead_sign = 0;
  for (const auto& x : w) {
    if (x != 0) {
      lead_sign = x > 0 ? 1 : -1;
      break;
    }
  }
  if (lead_sign < 0) g = -g;
  for (auto& x : w) x /= g;
  return w;
}

RatVec to_rational(const std::vector<Int>& v) {
  RatVec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = Rational(v[i]);
  return out;
}

bool int_vec_less(const std::vector<Int>& a, const std::vector<Int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace qie
