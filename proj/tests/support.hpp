#pragma once

#include <catch2/catch_amalgamated.hpp>

#include "subalg/collections.hpp"
#include "subalg/generators.hpp"
#include "subalg/solvers.hpp"

namespace testsupport {

using namespace subalg;

inline double mat_dist(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).max_abs(); }

inline bool approx_eq(const ComplexMatrix& a, const ComplexMatrix& b, double eps) {
  return a.rows() == b.rows() && a.cols() == b.cols() && mat_dist(a, b) <= eps;
}

// Independent oracle for the Z problem: solve the defining constraints as one
// dense linear system per input basis vector, never touching the closed-form
// operator formulas under test.
inline ComplexMatrix solve_z_oracle(const ZCollection& c, const MaterialAssignment& z,
                                    const Tolerance& tol = Tolerance{}) {
  const std::size_t m = c.m(), q1 = c.e.dim(), q2 = c.j.dim();
  REQUIRE(m + q1 + q2 == c.h);
  const ComplexMatrix l = l_operator(c, z, tol);
  // Unknowns (jcoef; b; a): j + J(b) - L E(a) = L u_k.
  ComplexMatrix sys(c.h, c.h);
  sys.set_block(0, 0, c.u);
  if (q2 > 0) sys.set_block(0, m, c.j.basis());
  if (q1 > 0) sys.set_block(0, m + q2, cplx(-1.0) * (l * c.e.basis()));
  ComplexMatrix rhs = l * c.u;
  const ComplexMatrix sol = solve_linear(sys, rhs, tol);
  return sol.block(0, 0, m, m);
}

// Independent oracle for the Y problem, same idea: rows are the V coordinates
// of E minus the input plus the H coordinates of the constitutive relation.
inline ComplexMatrix solve_y_oracle(const YCollection& c, const MaterialAssignment& z,
                                    const Tolerance& tol = Tolerance{}) {
  const std::size_t m = c.m(), q1 = c.e.dim(), q2 = c.j.dim();
  REQUIRE(q1 + q2 == c.k);
  const ComplexMatrix hb = phase_concat(c.phases, c.k);
  const std::size_t hh = hb.cols();
  const ComplexMatrix basis = hcat(c.v, hb);
  const ComplexMatrix binv = inverse(basis, tol);
  const ComplexMatrix xi_v = binv.block(0, 0, m, c.k);
  const ComplexMatrix xi_h = binv.block(m, 0, hh, c.k);
  const ComplexMatrix l = l_operator(c, z, tol);

  // Unknowns (a; b): xi_v E(a) = delta_k, xi_h (J(b) - L E(a)) = 0.
  ComplexMatrix sys(m + hh, q1 + q2);
  sys.set_block(0, 0, xi_v * c.e.basis());
  sys.set_block(m, 0, cplx(-1.0) * (xi_h * (l * c.e.basis())));
  sys.set_block(m, q1, xi_h * c.j.basis());
  ComplexMatrix rhs(m + hh, m);
  rhs.set_block(0, 0, ComplexMatrix::identity(m));
  const ComplexMatrix sol = solve_linear(sys, rhs, tol);
  const ComplexMatrix b = sol.block(q1, 0, q2, m);
  return cplx(-1.0) * (xi_v * (c.j.basis() * b));
}

inline MaterialAssignment reciprocal(const MaterialAssignment& z) {
  std::vector<cplx> r(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) r[i] = cplx(1.0) / z.z[i];
  return MaterialAssignment(r);
}

}  // namespace testsupport
