#pragma once

#include "qie/rational.hpp"

#include <cstddef>
#include <optional>

namespace qie {

RatMat rat_identity(std::size_t n);
RatMat rat_zeros(std::size_t rows, std::size_t cols);
RatMat rat_transpose(const RatMat& m);
RatMat rat_mul(const RatMat& a, const RatMat& b);
RatVec rat_apply(const RatMat& m, const RatVec& v);
RatMat rat_scale(const RatMat& m, const Rational& c);
bool rat_is_zero_vec(const RatVec& v);

Rational rat_det(RatMat m);

/// Inverse by Gauss-Jordan; nullopt when singular.
std::optional<RatMat> rat_inverse(const RatMat& m);

struct Rref {
  RatMat mat;
  std::vector<std::size_t> pivots;  // pivot column per nonzero row
  std::size_t rank = 0;
};

/// Reduced row echelon form; zero rows dropped, so mat.size() == rank.
Rref rat_rref(RatMat m);

std::size_t rat_rank(const RatMat& m);

/// Basis of {x : m x = 0}, one vector per free column, deterministic order.
std::vector<RatVec> rat_nullspace(const RatMat& m, std::size_t cols);

/// True when v lies in the row span of an RREF basis.
bool rat_in_rowspan(const Rref& basis, const RatVec& v);

Rational rat_dot(const RatVec& a, const RatVec& b);

/// One solution of A x = b, or nullopt when inconsistent. Free variables are
/// set to zero, so the result is deterministic.
std::optional<RatVec> rat_solve(const RatMat& a, const RatVec& b);

/// Scales to coprime integers with a positive leading nonzero entry.
/// The zero vector is rejected: hyperplane normals and basis rows are nonzero.
std::vector<Int> primitive_integer(const RatVec& v);

RatVec to_rational(const std::vector<Int>& v);

/// Lexicographic order on integer vectors, used for canonical orderings.
bool int_vec_less(const std::vector<Int>& a, const std::vector<Int>& b);

}  // namespace qie
