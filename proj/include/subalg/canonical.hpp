#pragma once

#include "subalg/collections.hpp"

namespace subalg {

// Small hand-built collections with known associated functions. They are the
// atoms of the realization compiler and the reference cases of the test
// suite.

// Z(2) collection on C^3 whose associated function is z1^2/z2. U, E, J are
// the coordinate axes; the one-dimensional phase P2 is spanned by
// (-1, 1, 1) and P1 is the kernel of the row (1, 1, 1), which places the
// orientation weights at W.P = W_E P_E = -W_U P_U.
inline ZCollection scalar_square_collection(const Tolerance& tol = Tolerance{}) {
  ZCollection c;
  c.h = 3;
  c.u = ComplexMatrix(3, 1, {1, 0, 0});
  c.e = Subspace::from_span(ComplexMatrix(3, 1, {0, 1, 0}), tol);
  c.j = Subspace::from_span(ComplexMatrix(3, 1, {0, 0, 1}), tol);
  const ComplexMatrix w(1, 3, {1, 1, 1});
  c.phases.push_back(Subspace::from_span(null_space(w, tol), tol));
  c.phases.push_back(Subspace::from_span(ComplexMatrix(3, 1, {-1, 1, 1}), tol));
  return c;
}

// Z(2) collection on C^3 whose associated function is c z1 + (1-c) z2: the
// phase vector has no E component, which collapses the response to a plain
// weighted average.
inline ZCollection weighted_average_collection(cplx weight, const Tolerance& tol = Tolerance{}) {
  ZCollection c;
  c.h = 3;
  c.u = ComplexMatrix(3, 1, {1, 0, 0});
  c.e = Subspace::from_span(ComplexMatrix(3, 1, {0, 1, 0}), tol);
  c.j = Subspace::from_span(ComplexMatrix(3, 1, {0, 0, 1}), tol);
  const ComplexMatrix w(1, 3, {1, 1, 1});
  c.phases.push_back(Subspace::from_span(null_space(w, tol), tol));
  c.phases.push_back(
      Subspace::from_span(ComplexMatrix(3, 1, {cplx(1.0) - weight, 0, weight}), tol));
  return c;
}

// Y(n) collection with one-dimensional V, E and phases, realizing the linear
// form sum_i alpha_i z_i. Requires 1 + sum(alpha) != 0 so that E and J stay
// independent.
inline YCollection y_scalar_collection(const std::vector<cplx>& alpha,
                                       const Tolerance& tol = Tolerance{}) {
  const std::size_t n = alpha.size();
  cplx total(1.0, 0.0);
  for (const cplx& a : alpha) total += a;
  if (std::abs(total) < 1e-12)
    fail(errc::invalid_argument, "scalar Y atom needs 1 + sum(alpha) != 0");
  YCollection c;
  c.k = n + 1;
  c.v = ComplexMatrix(n + 1, 1);
  c.v(0, 0) = 1.0;
  ComplexMatrix evec(n + 1, 1);
  evec(0, 0) = 1.0;
  for (std::size_t i = 1; i <= n; ++i) evec(i, 0) = 1.0;
  c.e = Subspace::from_span(evec, tol);
  ComplexMatrix w(1, n + 1);
  w(0, 0) = 1.0;
  for (std::size_t i = 1; i <= n; ++i) w(0, i) = alpha[i - 1];
  c.j = Subspace::from_span(null_space(w, tol), tol);
  for (std::size_t i = 1; i <= n; ++i) {
    ComplexMatrix p(n + 1, 1);
    p(i, 0) = 1.0;
    c.phases.push_back(Subspace::from_span(p, tol));
  }
  return c;
}

// Y(1) collection on C^4 with two-dimensional V and one two-dimensional
// phase. E and J orientations are free parameters; the associated function is
// Y(z1) = -z1 * [[e13 j31 + e14 j41, e23 j31 + e24 j41],
//                [e13 j32 + e14 j42, e23 j32 + e24 j42]].
struct YBlockParams {
  cplx e13, e14, e23, e24;
  cplx j31, j32, j41, j42;
};

inline YCollection y_block_collection(const YBlockParams& p, const Tolerance& tol = Tolerance{}) {
  YCollection c;
  c.k = 4;
  c.v = ComplexMatrix(4, 2, {1, 0, 0, 1, 0, 0, 0, 0});
  c.e = Subspace::from_span(
      ComplexMatrix(4, 2, {1, 0, 0, 1, p.e13, p.e23, p.e14, p.e24}), tol);
  c.j = Subspace::from_span(
      ComplexMatrix(4, 2, {p.j31, p.j41, p.j32, p.j42, 1, 0, 0, 1}), tol);
  c.phases.push_back(
      Subspace::from_span(ComplexMatrix(4, 2, {0, 0, 0, 0, 1, 0, 0, 1}), tol));
  return c;
}

// The additive zero: E = V = the whole space, J empty, every phase empty.
// Its associated function is identically zero; V meets E by construction,
// so it fails (and must fail) the inverse-problem validation condition.
inline YCollection additive_zero_y(std::size_t m, std::size_t n, const Tolerance& tol = Tolerance{}) {
  YCollection c;
  c.k = m;
  c.v = ComplexMatrix::identity(m);
  c.e = Subspace::full(m, tol);
  c.j = Subspace::zero(m);
  for (std::size_t i = 0; i < n; ++i) c.phases.push_back(Subspace::zero(m));
  return c;
}

}  // namespace subalg
