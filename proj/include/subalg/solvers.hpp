#pragma once

#include <array>
#include <optional>
#include <vector>

#include "subalg/collections.hpp"

namespace subalg {

enum class SolveMethod { direct, shifted };

struct SolveOptions {
  SolveMethod method = SolveMethod::shifted;
  std::optional<cplx> z0;  // unset: try the shift ladder 1, 1+0.3i, 1-0.3i, 2
};

// The operator matrix of an associated function, represented in the stored
// basis of the governing space (U for Z, V for Y, v_in+v_out for F).
struct AssociatedEval {
  ComplexMatrix value;
  MaterialAssignment z;
  SolveMethod method = SolveMethod::shifted;
  cplx z0 = cplx(1.0, 0.0);
  std::size_t port_dim = 0;  // superfunctions only
};

namespace detail {

inline ComplexMatrix in_governing_basis(const ComplexMatrix& op, const ComplexMatrix& basis,
                                        const Tolerance& tol) {
  return coords_in(basis, op * basis, tol);
}

inline std::array<cplx, 4> shift_ladder() {
  return {cplx(1.0, 0.0), cplx(1.0, 0.3), cplx(1.0, -0.3), cplx(2.0, 0.0)};
}

}  // namespace detail

// --- Z problem ---------------------------------------------------------------

// Compression form: Z = G0 [ (G0+G2) L^{-1} (G0+G2) ]^{-1} G0 with the middle
// inverse taken on U + J. Needs L invertible on the whole ambient space.
inline ComplexMatrix solve_z_direct(const ZCollection& c, const MaterialAssignment& z,
                                    const Tolerance& tol = Tolerance{}) {
  if (z.size() != c.n()) fail(errc::dimension_mismatch, "material count != phase count");
  ZProjectors zp = projectors(c, tol);
  const ComplexMatrix l = l_operator(zp.lambdas, z, c.h);
  ComplexMatrix linv;
  try {
    linv = inverse(l, tol);
  } catch (const Error&) {
    throw Error(errc::singular_l, "material operator not invertible");
  }
  const ComplexMatrix g02 = zp.g0 + zp.g2;
  const ComplexMatrix uj = hcat(c.u, c.j.basis());
  ComplexMatrix mid;
  try {
    mid = restricted_inverse(g02 * linv * g02, uj, tol);
  } catch (const Error&) {
    throw Error(errc::singular_l, "compression to U+J not invertible");
  }
  return detail::in_governing_basis(zp.g0 * mid * zp.g0, c.u, tol);
}

// Resolvent form: Z = z0 G0 + z0 G0 (L - z0 I) [ z0 I + G1 (L - z0 I) ]^{-1} G0.
// The bracket applied to e + E gives z0 e because G1 annihilates j + J and
// restores z0 E with the opposite sign.
inline ComplexMatrix solve_z_shifted(const ZCollection& c, const MaterialAssignment& z, cplx z0,
                                     const Tolerance& tol = Tolerance{}) {
  if (z.size() != c.n()) fail(errc::dimension_mismatch, "material count != phase count");
  if (z0 == cplx(0.0, 0.0)) fail(errc::singular_resolvent, "shift must be nonzero");
  ZProjectors zp = projectors(c, tol);
  const ComplexMatrix l = l_operator(zp.lambdas, z, c.h);
  const ComplexMatrix shifted = l - z0 * ComplexMatrix::identity(c.h);
  ComplexMatrix res;
  try {
    res = inverse(z0 * ComplexMatrix::identity(c.h) + zp.g1 * shifted, tol);
  } catch (const Error&) {
    throw Error(errc::singular_resolvent, "shifted bracket is singular");
  }
  const ComplexMatrix op = z0 * zp.g0 + z0 * zp.g0 * shifted * res * zp.g0;
  return detail::in_governing_basis(op, c.u, tol);
}

inline AssociatedEval solve_z(const ZCollection& c, const MaterialAssignment& z,
                              const SolveOptions& opts = SolveOptions{},
                              const Tolerance& tol = Tolerance{}) {
  AssociatedEval ev;
  ev.z = z;
  ev.method = opts.method;
  if (opts.method == SolveMethod::direct) {
    ev.value = solve_z_direct(c, z, tol);
    return ev;
  }
  if (opts.z0) {
    ev.z0 = *opts.z0;
    ev.value = solve_z_shifted(c, z, *opts.z0, tol);
    return ev;
  }
  for (cplx z0 : detail::shift_ladder()) {
    try {
      ev.value = solve_z_shifted(c, z, z0, tol);
      ev.z0 = z0;
      return ev;
    } catch (const Error& e) {
      if (e.code() != errc::singular_resolvent) throw;
    }
  }
  // Last rung: the compression form covers a few degenerate collections whose
  // resolvent bracket is singular at every shift.
  ev.method = SolveMethod::direct;
  ev.value = solve_z_direct(c, z, tol);
  return ev;
}

// --- Y problem ---------------------------------------------------------------

// Compression form: Y = Pi1 (G2 L^{-1} Pi2 G2)^{-1} G2 restricted to V, with
// L inverted on H and the middle inverse taken on J.
inline ComplexMatrix solve_y_direct(const YCollection& c, const MaterialAssignment& z,
                                    const Tolerance& tol = Tolerance{}) {
  if (z.size() != c.n()) fail(errc::dimension_mismatch, "material count != phase count");
  YProjectors yp = projectors(c, tol);
  const ComplexMatrix l = l_operator(yp.lambdas, z, c.k);
  const ComplexMatrix hb = phase_concat(c.phases, c.k);
  ComplexMatrix linv;
  try {
    linv = restricted_inverse(l, hb, tol);
  } catch (const Error&) {
    throw Error(errc::singular_l, "material operator not invertible on H");
  }
  ComplexMatrix mid;
  try {
    mid = restricted_inverse(yp.g2 * linv * yp.pi2 * yp.g2, c.j.basis(), tol);
  } catch (const Error&) {
    throw Error(errc::singular_on_j, "compression to J not invertible");
  }
  return detail::in_governing_basis(yp.pi1 * mid * yp.g2, c.v, tol);
}

// Resolvent form: Y = -z0 Pi1 + z0 Pi1 [ G1 + z0 (L - z0 I)^{-1} Pi2 ]^{-1} Pi1.
// The bracket sends the combined field P = J - z0 E to -z0 E1: its G1 term
// contributes -z0(E1 + E2) and the resolvent term restores z0 E2.
inline ComplexMatrix solve_y_shifted(const YCollection& c, const MaterialAssignment& z, cplx z0,
                                     const Tolerance& tol = Tolerance{}) {
  if (z.size() != c.n()) fail(errc::dimension_mismatch, "material count != phase count");
  if (z0 == cplx(0.0, 0.0)) fail(errc::singular_resolvent, "shift must be nonzero");
  YProjectors yp = projectors(c, tol);
  const ComplexMatrix l = l_operator(yp.lambdas, z, c.k);
  const ComplexMatrix shifted = l - z0 * ComplexMatrix::identity(c.k);
  ComplexMatrix sres, bres;
  try {
    sres = inverse(shifted, tol);
    bres = inverse(yp.g1 + z0 * sres * yp.pi2, tol);
  } catch (const Error&) {
    throw Error(errc::singular_resolvent, "shifted bracket is singular");
  }
  const ComplexMatrix op = cplx(-1.0) * z0 * yp.pi1 + z0 * yp.pi1 * bres * yp.pi1;
  return detail::in_governing_basis(op, c.v, tol);
}

inline AssociatedEval solve_y(const YCollection& c, const MaterialAssignment& z,
                              const SolveOptions& opts = SolveOptions{},
                              const Tolerance& tol = Tolerance{}) {
  AssociatedEval ev;
  ev.z = z;
  ev.method = opts.method;
  if (opts.method == SolveMethod::direct) {
    ev.value = solve_y_direct(c, z, tol);
    return ev;
  }
  if (opts.z0) {
    ev.z0 = *opts.z0;
    ev.value = solve_y_shifted(c, z, *opts.z0, tol);
    return ev;
  }
  for (cplx z0 : detail::shift_ladder()) {
    try {
      ev.value = solve_y_shifted(c, z, z0, tol);
      ev.z0 = z0;
      return ev;
    } catch (const Error& e) {
      if (e.code() != errc::singular_resolvent) throw;
    }
  }
  ev.method = SolveMethod::direct;
  ev.value = solve_y_direct(c, z, tol);
  return ev;
}

// --- superfunctions ----------------------------------------------------------

// Solves the port problem directly as a linear system in the E and J
// coefficients: given the input pair it returns the output pair. This agrees
// with assembling F from the Y blocks whenever Y exists, and additionally
// covers collections (like the multiplicative identity) whose Y problem is
// unsolvable while F is perfectly well defined.
inline AssociatedEval solve_superfunction(const Superfunction& s, const MaterialAssignment& z,
                                          const Tolerance& tol = Tolerance{}) {
  const YCollection& c = s.base;
  if (z.size() != c.n()) fail(errc::dimension_mismatch, "material count != phase count");
  const std::size_t mu = s.ports();
  const std::size_t q1 = c.e.dim(), q2 = c.j.dim();
  if (q1 + q2 != c.k) fail(errc::not_direct_sum, "E and J do not total the ambient dimension");

  // Coordinate functionals of the V + H decomposition.
  const ComplexMatrix hb = phase_concat(c.phases, c.k);
  const std::size_t hh = hb.cols();
  ComplexMatrix bases = hcat(c.v, hb);
  ComplexMatrix binv;
  try {
    binv = inverse(bases, tol);
  } catch (const Error&) {
    throw Error(errc::not_direct_sum, "V and H do not decompose the ambient space");
  }
  const ComplexMatrix xi_in = binv.block(0, 0, mu, c.k);
  const ComplexMatrix xi_out = binv.block(mu, 0, mu, c.k);
  const ComplexMatrix xi_h = binv.block(2 * mu, 0, hh, c.k);

  YProjectors yp = projectors(c, tol);
  const ComplexMatrix l = l_operator(yp.lambdas, z, c.k);
  const ComplexMatrix be = c.e.basis(), bj = c.j.basis();

  // Unknowns (a; b): the E- and J-space coefficients. Rows: the constitutive
  // relation in H coordinates, then the two input pins.
  ComplexMatrix sys(hh + 2 * mu, q1 + q2);
  sys.set_block(0, 0, cplx(-1.0) * (xi_h * (l * be)));
  sys.set_block(0, q1, xi_h * bj);
  sys.set_block(hh, 0, xi_in * be);
  sys.set_block(hh + mu, q1, xi_in * bj);

  ComplexMatrix rhs(hh + 2 * mu, 2 * mu);
  rhs.set_block(hh, 0, ComplexMatrix::identity(mu));
  rhs.set_block(hh + mu, mu, ComplexMatrix::identity(mu));

  ComplexMatrix ab;
  try {
    ab = solve_linear(sys, rhs, tol);
  } catch (const Error&) {
    throw Error(errc::singular_coupling, "port problem has no unique solution");
  }
  const ComplexMatrix a = ab.block(0, 0, q1, 2 * mu);
  const ComplexMatrix b = ab.block(q1, 0, q2, 2 * mu);

  AssociatedEval ev;
  ev.z = z;
  ev.method = SolveMethod::direct;
  ev.port_dim = mu;
  ev.value = ComplexMatrix(2 * mu, 2 * mu);
  ev.value.set_block(0, 0, xi_out * (be * a));
  ev.value.set_block(mu, 0, xi_out * (bj * b));
  return ev;
}

// Assembles F from the blocks of a Y matrix taken in a v_in|v_out basis.
inline ComplexMatrix f_from_y(const ComplexMatrix& y, std::size_t mu, const Tolerance& tol = Tolerance{}) {
  const ComplexMatrix yii = y.block(0, 0, mu, mu);
  const ComplexMatrix yio = y.block(0, mu, mu, mu);
  const ComplexMatrix yoi = y.block(mu, 0, mu, mu);
  const ComplexMatrix yoo = y.block(mu, mu, mu, mu);
  ComplexMatrix yio_inv;
  try {
    yio_inv = inverse(yio, tol);
  } catch (const Error&) {
    throw Error(errc::singular_coupling, "input-output coupling block is singular");
  }
  ComplexMatrix f(2 * mu, 2 * mu);
  f.set_block(0, 0, cplx(-1.0) * (yio_inv * yii));
  f.set_block(0, mu, cplx(-1.0) * yio_inv);
  f.set_block(mu, 0, yoo * yio_inv * yii - yoi);
  f.set_block(mu, mu, yoo * yio_inv);
  return f;
}

// Inverts f_from_y: recovers the Y blocks from F.
inline ComplexMatrix y_from_f(const ComplexMatrix& f, std::size_t mu, const Tolerance& tol = Tolerance{}) {
  const ComplexMatrix fee = f.block(0, 0, mu, mu);
  const ComplexMatrix fej = f.block(0, mu, mu, mu);
  const ComplexMatrix fje = f.block(mu, 0, mu, mu);
  const ComplexMatrix fjj = f.block(mu, mu, mu, mu);
  ComplexMatrix fej_inv;
  try {
    fej_inv = inverse(fej, tol);
  } catch (const Error&) {
    throw Error(errc::singular_fej, "current transfer block is singular");
  }
  ComplexMatrix y(2 * mu, 2 * mu);
  y.set_block(0, 0, fej_inv * fee);
  y.set_block(0, mu, cplx(-1.0) * fej_inv);
  y.set_block(mu, 0, fjj * fej_inv * fee - fje);
  y.set_block(mu, mu, cplx(-1.0) * (fjj * fej_inv));
  return y;
}

inline AssociatedEval y_from_f(const AssociatedEval& f, const Tolerance& tol = Tolerance{}) {
  AssociatedEval ev;
  ev.z = f.z;
  ev.method = f.method;
  ev.port_dim = f.port_dim;
  ev.value = y_from_f(f.value, f.port_dim, tol);
  return ev;
}

// --- series expansion --------------------------------------------------------

// Partial sums of the expansion of Z about z0: term 0 is z0 I on U, term j is
// G0 (L - z0 I) [G1 (L - z0 I) / z0]^{j-1} G0. Converges to the resolvent
// form when the bracketed operator is a contraction.
struct SeriesExpansion {
  std::vector<ComplexMatrix> z_terms;  // m x m, in the stored u basis
  std::vector<ComplexMatrix> e_terms;  // h x m field terms, index j >= 1
  cplx z0 = cplx(1.0, 0.0);

  ComplexMatrix partial_sum(std::size_t order) const {
    ComplexMatrix s = z_terms.at(0);
    for (std::size_t j = 1; j <= order && j < z_terms.size(); ++j) s += z_terms[j];
    return s;
  }
};

inline SeriesExpansion series_expand(const ZCollection& c, const MaterialAssignment& z, cplx z0,
                                     std::size_t order, const Tolerance& tol = Tolerance{}) {
  if (z0 == cplx(0.0, 0.0)) fail(errc::invalid_argument, "expansion point must be nonzero");
  ZProjectors zp = projectors(c, tol);
  const ComplexMatrix l = l_operator(zp.lambdas, z, c.h);
  const ComplexMatrix d = l - z0 * ComplexMatrix::identity(c.h);
  const ComplexMatrix step = (cplx(-1.0) / z0) * (zp.g1 * d);

  SeriesExpansion se;
  se.z0 = z0;
  ComplexMatrix acc = c.u;  // [G1 (L - z0 I)/z0]^{j-1} applied to the u basis
  se.z_terms.push_back(z0 * ComplexMatrix::identity(c.m()));
  const double scale = std::max(1.0, se.z_terms[0].max_abs());
  std::size_t rising = 0;
  double prev = -1.0;
  for (std::size_t j = 1; j <= order; ++j) {
    const ComplexMatrix term = coords_in(c.u, zp.g0 * (d * acc), tol);
    se.z_terms.push_back(term);
    acc = step * acc;
    se.e_terms.push_back(acc);
    const double tn = term.max_abs();
    if (tn > 1e-14 * scale && prev >= 0.0 && tn >= prev) {
      if (++rising >= 5) throw Error(errc::divergent, "term norms are not decreasing");
    } else {
      rising = 0;
    }
    prev = tn;
  }
  return se;
}

}  // namespace subalg
