#pragma once

#include <utility>

#include "subalg/solvers.hpp"

namespace subalg {

// Port coupling maps for superfunction multiplication, given as matrices from
// the stored v_out coordinates of the upstream factor to the stored v_in
// coordinates of the downstream factor.
struct PortMaps {
  ComplexMatrix m_e, m_j;
};

// Phase-wise rescaling constants for reference transformations.
struct ScalingVector {
  std::vector<cplx> c_e, c_j;
};

namespace detail {

// Coordinate functionals of a k-dimensional ambient split into the listed
// blocks; row ranges follow the block order.
struct Functionals {
  ComplexMatrix binv;
  std::vector<std::size_t> offset;

  ComplexMatrix rows(std::size_t block, std::size_t count) const {
    return binv.block(offset[block], 0, count, binv.cols());
  }
};

inline Functionals split_functionals(const std::vector<ComplexMatrix>& blocks, std::size_t ambient,
                                     const Tolerance& tol) {
  ComplexMatrix b(ambient, 0);
  Functionals f;
  for (const ComplexMatrix& blk : blocks) {
    f.offset.push_back(b.cols());
    b = hcat(b, blk);
  }
  if (b.cols() != ambient) throw Error(errc::not_direct_sum, "blocks do not fill the ambient space");
  try {
    f.binv = inverse(b, tol);
  } catch (const Error&) {
    throw Error(errc::not_direct_sum, "blocks are not independent");
  }
  return f;
}

inline ComplexMatrix lift_rows(const ComplexMatrix& b, std::size_t total_rows, std::size_t row0) {
  ComplexMatrix out(total_rows, b.cols());
  out.set_block(row0, 0, b);
  return out;
}

inline void require_structural(const ValidationReport& r, errc code, const char* what) {
  if (!r.structural_pass()) throw Error(code, what);
}

}  // namespace detail

// --- addition and embedding --------------------------------------------------

// Sum of two Y collections over a fresh port space V: s1 and s2 carry the
// stored V coordinates of each operand into the new V. The result is a
// Y(j + k) collection, phases of c1 first; in the new coordinates the
// function is s1 Y1(z') s1^{-1} + s2 Y2(z'') s2^{-1}.
inline YCollection add_y(const YCollection& c1, const YCollection& c2, const ComplexMatrix& s1,
                         const ComplexMatrix& s2, const Tolerance& tol = Tolerance{}) {
  const std::size_t m = c1.m();
  if (c2.m() != m) throw Error(errc::dimension_mismatch, "summands have different port dimensions");
  if (s1.rows() != m || s1.cols() != m || s2.rows() != m || s2.cols() != m ||
      !is_invertible(s1, tol) || !is_invertible(s2, tol))
    throw Error(errc::singular_map, "port identification maps must be nonsingular m x m");

  const ComplexMatrix hb1 = phase_concat(c1.phases, c1.k);
  const ComplexMatrix hb2 = phase_concat(c2.phases, c2.k);
  const std::size_t h1 = hb1.cols(), h2 = hb2.cols();
  const std::size_t dim = m + h1 + h2;

  const detail::Functionals f1 = detail::split_functionals({c1.v, hb1}, c1.k, tol);
  const detail::Functionals f2 = detail::split_functionals({c2.v, hb2}, c2.k, tol);
  const ComplexMatrix xi1v = f1.rows(0, m), xi1h = f1.rows(1, h1);
  const ComplexMatrix xi2v = f2.rows(0, m), xi2h = f2.rows(1, h2);

  // E: pairs whose identified V parts agree.
  const ComplexMatrix ve1 = s1 * (xi1v * c1.e.basis());
  const ComplexMatrix ve2 = s2 * (xi2v * c2.e.basis());
  const ComplexMatrix constraint = hcat(ve1, cplx(-1.0) * ve2);
  const ComplexMatrix ns = null_space(constraint, tol);
  ComplexMatrix egen(dim, ns.cols());
  for (std::size_t c = 0; c < ns.cols(); ++c) {
    const ComplexMatrix a = ns.block(0, c, c1.e.dim(), 1);
    const ComplexMatrix b = ns.block(c1.e.dim(), c, c2.e.dim(), 1);
    egen.set_block(0, c, ve1 * a);
    egen.set_block(m, c, xi1h * (c1.e.basis() * a));
    egen.set_block(m + h1, c, xi2h * (c2.e.basis() * b));
  }

  // J: the identified V parts add freely.
  ComplexMatrix jgen(dim, c1.j.dim() + c2.j.dim());
  jgen.set_block(0, 0, s1 * (xi1v * c1.j.basis()));
  jgen.set_block(m, 0, xi1h * c1.j.basis());
  jgen.set_block(0, c1.j.dim(), s2 * (xi2v * c2.j.basis()));
  jgen.set_block(m + h1, c1.j.dim(), xi2h * c2.j.basis());

  YCollection out;
  out.k = dim;
  out.v = detail::lift_rows(ComplexMatrix::identity(m), dim, 0);
  out.e = Subspace::from_span(egen, tol);
  out.j = Subspace::from_span(jgen, tol);
  for (std::size_t i = 0; i < c1.n(); ++i)
    out.phases.push_back(
        Subspace::from_span(detail::lift_rows(xi1h * c1.phases[i].basis(), dim, m), tol));
  for (std::size_t i = 0; i < c2.n(); ++i)
    out.phases.push_back(
        Subspace::from_span(detail::lift_rows(xi2h * c2.phases[i].basis(), dim, m + h1), tol));
  detail::require_structural(validate(out, tol), errc::not_direct_sum,
                             "sum collection is degenerate");
  return out;
}

// Embeds a Y collection in a larger port space, placing the old V coordinates
// at the given positions; the associated function becomes Y composed with the
// projection onto the old V.
inline YCollection embed_at(const YCollection& c, std::size_t target_dim,
                            const std::vector<std::size_t>& positions,
                            const Tolerance& tol = Tolerance{}) {
  const std::size_t m = c.m();
  if (target_dim < m) fail(errc::invalid_argument, "embedding must not shrink V");
  if (positions.size() != m) fail(errc::invalid_argument, "one position per old V column");
  const std::size_t extra = target_dim - m;
  const std::size_t dim = c.k + extra;

  std::vector<bool> used(target_dim, false);
  for (std::size_t p : positions) {
    if (p >= target_dim || used[p]) fail(errc::invalid_argument, "positions must be distinct");
    used[p] = true;
  }

  // columns of the new V: old columns at their positions, fresh directions
  // (appended coordinates) at the rest
  ComplexMatrix v(dim, target_dim);
  std::size_t next_w = 0;
  for (std::size_t p = 0; p < target_dim; ++p) {
    if (used[p]) continue;
    v(c.k + next_w, p) = 1.0;
    ++next_w;
  }
  for (std::size_t k = 0; k < m; ++k)
    v.set_block(0, positions[k], detail::lift_rows(c.v.col(k), dim, 0));

  ComplexMatrix w_units(dim, extra);
  for (std::size_t i = 0; i < extra; ++i) w_units(c.k + i, i) = 1.0;

  YCollection out;
  out.k = dim;
  out.v = v;
  out.e = Subspace::from_span(hcat(detail::lift_rows(c.e.basis(), dim, 0), w_units), tol);
  out.j = Subspace::from_span(detail::lift_rows(c.j.basis(), dim, 0), tol);
  for (const Subspace& p : c.phases)
    out.phases.push_back(Subspace::from_span(detail::lift_rows(p.basis(), dim, 0), tol));
  return out;
}

inline YCollection embed(const YCollection& c, std::size_t target_dim,
                         const Tolerance& tol = Tolerance{}) {
  std::vector<std::size_t> positions(c.m());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
  return embed_at(c, target_dim, positions, tol);
}

// --- superfunction multiplication ---------------------------------------------

// Product of superfunctions: the upstream factor s2 feeds the downstream
// factor s1 through the port maps, so the associated functions compose as
// F = F1 diag(m_e, m_j) F2. Phases of s1 come first in the product.
inline Superfunction multiply_superfunctions(const Superfunction& s1, const Superfunction& s2,
                                             const PortMaps& ports,
                                             const Tolerance& tol = Tolerance{}) {
  const std::size_t mu = s1.ports();
  if (s2.ports() != mu) throw Error(errc::port_mismatch, "factors have different port dimensions");
  if (ports.m_e.rows() != mu || ports.m_e.cols() != mu || ports.m_j.rows() != mu ||
      ports.m_j.cols() != mu || !is_invertible(ports.m_e, tol) || !is_invertible(ports.m_j, tol))
    throw Error(errc::port_mismatch, "port maps must be nonsingular mu x mu");

  const YCollection& c1 = s1.base;
  const YCollection& c2 = s2.base;
  const ComplexMatrix hb1 = phase_concat(c1.phases, c1.k);
  const ComplexMatrix hb2 = phase_concat(c2.phases, c2.k);
  const std::size_t h1 = hb1.cols(), h2 = hb2.cols();
  const std::size_t dim = 2 * mu + h1 + h2;

  const detail::Functionals f1 = detail::split_functionals({s1.v_in, s1.v_out, hb1}, c1.k, tol);
  const detail::Functionals f2 = detail::split_functionals({s2.v_in, s2.v_out, hb2}, c2.k, tol);
  const ComplexMatrix xi1_in = f1.rows(0, mu), xi1_out = f1.rows(1, mu), xi1_h = f1.rows(2, h1);
  const ComplexMatrix xi2_in = f2.rows(0, mu), xi2_out = f2.rows(1, mu), xi2_h = f2.rows(2, h2);

  // Coupling operator: it must be injective for E and J of the product to be
  // independent.
  YProjectors yp1 = projectors(c1, tol);
  YProjectors yp2 = projectors(c2, tol);
  const ComplexMatrix g1 = xi2_out * (yp2.g1 * s2.v_out);
  const ComplexMatrix g2 = xi2_out * (yp2.g2 * s2.v_out);
  const ComplexMatrix d1 = xi1_in * (yp1.g1 * s1.v_in);
  const ComplexMatrix coupling =
      ports.m_e * g1 - d1 * (ports.m_e * g1 + ports.m_j * g2);
  if (rank(coupling, tol) < mu)
    throw Error(errc::coupling_singular, "port coupling operator is singular");

  // Blocks: product input (s2 side), product output (s1 side), H1, H2.
  auto build = [&](const Subspace& sp1, const Subspace& sp2, const ComplexMatrix& link) {
    const ComplexMatrix in1 = xi1_in * sp1.basis();    // downstream input pins
    const ComplexMatrix out2 = xi2_out * sp2.basis();  // upstream output pins
    const ComplexMatrix constraint = hcat(in1, cplx(-1.0) * (link * out2));
    const ComplexMatrix ns = null_space(constraint, tol);
    ComplexMatrix gen(dim, ns.cols());
    for (std::size_t c = 0; c < ns.cols(); ++c) {
      const ComplexMatrix a = ns.block(0, c, sp1.dim(), 1);
      const ComplexMatrix b = ns.block(sp1.dim(), c, sp2.dim(), 1);
      gen.set_block(0, c, xi2_in * (sp2.basis() * b));
      gen.set_block(mu, c, xi1_out * (sp1.basis() * a));
      gen.set_block(2 * mu, c, xi1_h * (sp1.basis() * a));
      gen.set_block(2 * mu + h1, c, xi2_h * (sp2.basis() * b));
    }
    return Subspace::from_span(gen, tol);
  };

  YCollection base;
  base.k = dim;
  base.e = build(c1.e, c2.e, ports.m_e);
  base.j = build(c1.j, c2.j, ports.m_j);
  for (std::size_t i = 0; i < c1.n(); ++i) {
    base.phases.push_back(
        Subspace::from_span(detail::lift_rows(xi1_h * c1.phases[i].basis(), dim, 2 * mu), tol));
  }
  for (std::size_t i = 0; i < c2.n(); ++i) {
    base.phases.push_back(Subspace::from_span(
        detail::lift_rows(xi2_h * c2.phases[i].basis(), dim, 2 * mu + h1), tol));
  }
  ComplexMatrix vin(dim, mu), vout(dim, mu);
  vin.set_block(0, 0, ComplexMatrix::identity(mu));
  vout.set_block(mu, 0, ComplexMatrix::identity(mu));

  Superfunction out = make_superfunction(std::move(base), std::move(vin), std::move(vout));
  detail::require_structural(validate(out.base, tol), errc::coupling_singular,
                             "product collection is degenerate");
  return out;
}

// The multiplicative identity for the given port maps: a phase-free
// collection on the two port blocks whose E and J are the graphs of the
// inverse maps; F = diag(m_e^{-1}, m_j^{-1}).
inline Superfunction identity_superfunction(const PortMaps& ports, const Tolerance& tol = Tolerance{}) {
  const std::size_t mu = ports.m_e.rows();
  if (ports.m_e.cols() != mu || ports.m_j.rows() != mu || ports.m_j.cols() != mu ||
      !is_invertible(ports.m_e, tol) || !is_invertible(ports.m_j, tol))
    throw Error(errc::degenerate_ports, "port maps must be nonsingular mu x mu");
  if (!is_invertible(ports.m_j - ports.m_e, tol))
    throw Error(errc::degenerate_ports, "difference of the port maps is singular");

  const ComplexMatrix me_inv = inverse(ports.m_e, tol);
  const ComplexMatrix mj_inv = inverse(ports.m_j, tol);

  YCollection base;
  base.k = 2 * mu;
  base.e = Subspace::from_span(vcat(me_inv, ComplexMatrix::identity(mu)), tol);
  base.j = Subspace::from_span(vcat(mj_inv, ComplexMatrix::identity(mu)), tol);
  ComplexMatrix vout(2 * mu, mu), vin(2 * mu, mu);
  vout.set_block(0, 0, ComplexMatrix::identity(mu));
  vin.set_block(mu, 0, ComplexMatrix::identity(mu));
  return make_superfunction(std::move(base), std::move(vin), std::move(vout));
}

// --- reference transformations ------------------------------------------------

// Phase-wise rescaling of E and J: the new collection's function is
// Y'(z) = Y(d_1 z_1, ..., d_n z_n) with d_i = c_e[i] / c_j[i].
inline YCollection reference_transform(const YCollection& c, const ScalingVector& sv,
                                       const Tolerance& tol = Tolerance{}) {
  if (sv.c_e.size() != c.n() || sv.c_j.size() != c.n())
    throw Error(errc::dimension_mismatch, "one scaling constant per phase");
  for (const cplx& v : sv.c_e)
    if (v == cplx(0.0, 0.0)) throw Error(errc::condition_violated, "zero scaling constant");
  for (const cplx& v : sv.c_j)
    if (v == cplx(0.0, 0.0)) throw Error(errc::condition_violated, "zero scaling constant");

  YProjectors yp = projectors(c, tol);
  ComplexMatrix psi_e = yp.pi1, psi_j = yp.pi1;
  for (std::size_t i = 0; i < c.n(); ++i) {
    psi_e += sv.c_e[i] * yp.lambdas[i];
    psi_j += sv.c_j[i] * yp.lambdas[i];
  }
  YCollection out = c;
  out.e = Subspace::from_span(psi_e * c.e.basis(), tol);
  out.j = Subspace::from_span(psi_j * c.j.basis(), tol);
  if (out.e.dim() != c.e.dim() || out.j.dim() != c.j.dim() ||
      rank(hcat(out.e.basis(), out.j.basis()), tol) != c.e.dim() + c.j.dim())
    throw Error(errc::condition_violated, "rescaled E and J are not independent");
  return out;
}

// The additive inverse: flips the sign of every phase component of E, so the
// function becomes Y(-z) = -Y(z).
inline YCollection additive_inverse(const YCollection& c, const Tolerance& tol = Tolerance{}) {
  ScalingVector sv;
  sv.c_e.assign(c.n(), cplx(-1.0, 0.0));
  sv.c_j.assign(c.n(), cplx(1.0, 0.0));
  return reference_transform(c, sv, tol);
}

// --- multiplicative inverse -----------------------------------------------------

// Swaps the port spaces and applies the sign flip Pi1 - Pi2 to E. Multiplying
// the original by the result (with the identity/minus-identity port maps)
// yields a multiplicative-identity superfunction.
inline Superfunction multiplicative_inverse(const Superfunction& s, const Tolerance& tol = Tolerance{}) {
  const YCollection& c = s.base;
  ComplexMatrix y1;
  try {
    y1 = solve_y(c, MaterialAssignment::ones(c.n()), SolveOptions{}, tol).value;
  } catch (const Error&) {
    throw Error(errc::no_inverse, "unit-material problem is not uniquely solvable");
  }
  if (!is_invertible(y1 - ComplexMatrix::identity(c.m()), tol))
    throw Error(errc::no_inverse, "unit-material response has a fixed direction");

  YProjectors yp = projectors(c, tol);
  const ComplexMatrix psi = yp.pi1 - yp.pi2;

  YCollection base;
  base.k = c.k;
  base.e = Subspace::from_span(psi * c.e.basis(), tol);
  base.j = c.j;
  base.phases = c.phases;
  Superfunction out = make_superfunction(std::move(base), s.v_out, s.v_in);
  const ValidationReport r = validate(out, tol);
  if (!r.structural_pass()) throw Error(errc::no_inverse, "inverse collection is degenerate");
  return out;
}

// --- substitution ---------------------------------------------------------------

namespace detail {

struct SubstitutionParts {
  std::size_t dim = 0;       // new ambient dimension
  std::size_t k = 0;         // host ambient dimension (block 1)
  Subspace e, j;             // new E and J
  std::vector<Subspace> phases;
};

// Shared core of both substitutions. The new ambient is the host space plus
// one copy of the plug's E and J per basis vector of the host phase being
// replaced; the plug's U direction folds onto that phase.
inline SubstitutionParts substitute_core(std::size_t host_ambient, const Subspace& host_e,
                                         const Subspace& host_j,
                                         const std::vector<Subspace>& host_phases, std::size_t slot,
                                         const ZCollection& plug, const Tolerance& tol) {
  if (plug.m() != 1) throw Error(errc::plug_not_scalar, "plug must have one-dimensional U");
  if (slot >= host_phases.size()) throw Error(errc::slot_out_of_range, "no such phase");

  const std::size_t k = host_ambient;
  const ComplexMatrix pi = host_phases[slot].basis();
  const std::size_t ps = pi.cols();
  const std::size_t q1p = plug.e.dim(), q2p = plug.j.dim();
  const std::size_t dim = k + ps * (q1p + q2p);

  const Functionals pf =
      split_functionals({plug.u, plug.e.basis(), plug.j.basis()}, plug.h, tol);
  const ComplexMatrix xi_u = pf.rows(0, 1);
  const ComplexMatrix xi_e = pf.rows(1, q1p);
  const ComplexMatrix xi_j = pf.rows(2, q2p);

  const std::size_t off_e = k;             // block of P_slot x E' coordinates
  const std::size_t off_j = k + ps * q1p;  // block of P_slot x J' coordinates

  SubstitutionParts parts;
  parts.dim = dim;
  parts.k = k;

  ComplexMatrix egen(dim, host_e.dim() + ps * q1p);
  egen.set_block(0, 0, host_e.basis());
  for (std::size_t c = 0; c < ps * q1p; ++c) egen(off_e + c, host_e.dim() + c) = 1.0;
  parts.e = Subspace::from_span(egen, tol);

  ComplexMatrix jgen(dim, host_j.dim() + ps * q2p);
  jgen.set_block(0, 0, host_j.basis());
  for (std::size_t c = 0; c < ps * q2p; ++c) jgen(off_j + c, host_j.dim() + c) = 1.0;
  parts.j = Subspace::from_span(jgen, tol);

  for (std::size_t r = 0; r < host_phases.size(); ++r) {
    if (r != slot) {
      parts.phases.push_back(
          Subspace::from_span(lift_rows(host_phases[r].basis(), dim, 0), tol));
      continue;
    }
    // the plug phases, tensored with the replaced host phase
    for (std::size_t t = 0; t < plug.n(); ++t) {
      const ComplexMatrix& w = plug.phases[t].basis();
      ComplexMatrix gen(dim, ps * w.cols());
      for (std::size_t a = 0; a < ps; ++a) {
        for (std::size_t v = 0; v < w.cols(); ++v) {
          const std::size_t col = a * w.cols() + v;
          const ComplexMatrix wv = w.col(v);
          const cplx alpha = (xi_u * wv)(0, 0);
          const ComplexMatrix beta = xi_e * wv;
          const ComplexMatrix gamma = xi_j * wv;
          gen.set_block(0, col, alpha * pi.col(a));
          for (std::size_t b = 0; b < q1p; ++b) gen(off_e + a * q1p + b, col) = beta(b, 0);
          for (std::size_t cjj = 0; cjj < q2p; ++cjj)
            gen(off_j + a * q2p + cjj, col) = gamma(cjj, 0);
        }
      }
      parts.phases.push_back(Subspace::from_span(gen, tol));
    }
  }
  return parts;
}

}  // namespace detail

// Substitutes the plug's scalar Z function for the slot-th material of a Y
// collection. Variables of the result: host variables with position `slot`
// replaced in place by the plug's variable list.
inline YCollection substitute_into_y(const YCollection& host, const ZCollection& plug,
                                     std::size_t slot, const Tolerance& tol = Tolerance{}) {
  detail::SubstitutionParts parts =
      detail::substitute_core(host.k, host.e, host.j, host.phases, slot, plug, tol);
  YCollection out;
  out.k = parts.dim;
  out.v = detail::lift_rows(host.v, parts.dim, 0);
  out.e = std::move(parts.e);
  out.j = std::move(parts.j);
  out.phases = std::move(parts.phases);
  detail::require_structural(validate(out, tol), errc::not_direct_sum,
                             "substituted collection is degenerate");
  return out;
}

inline ZCollection substitute_into_z(const ZCollection& host, const ZCollection& plug,
                                     std::size_t slot, const Tolerance& tol = Tolerance{}) {
  detail::SubstitutionParts parts =
      detail::substitute_core(host.h, host.e, host.j, host.phases, slot, plug, tol);
  ZCollection out;
  out.h = parts.dim;
  out.u = detail::lift_rows(host.u, parts.dim, 0);
  out.e = std::move(parts.e);
  out.j = std::move(parts.j);
  out.phases = std::move(parts.phases);
  detail::require_structural(validate(out, tol), errc::not_direct_sum,
                             "substituted collection is degenerate");
  return out;
}

// --- duality, merging, projection ----------------------------------------------

// Interchanging E and J sends the function to [Z(1/z)]^{-1} (same for Y).
inline ZCollection duality(const ZCollection& c) {
  ZCollection out = c;
  std::swap(out.e, out.j);
  return out;
}

inline YCollection duality(const YCollection& c) {
  YCollection out = c;
  std::swap(out.e, out.j);
  return out;
}

namespace detail {

inline std::vector<Subspace> merge_phase_list(const std::vector<Subspace>& phases, std::size_t i,
                                              std::size_t j, const Tolerance& tol) {
  if (i == j) fail(errc::invalid_argument, "cannot merge a phase with itself");
  if (i >= phases.size() || j >= phases.size()) fail(errc::slot_out_of_range, "no such phase");
  std::vector<Subspace> out;
  for (std::size_t r = 0; r < phases.size(); ++r) {
    if (r == j) continue;
    if (r == i)
      out.push_back(Subspace::from_span(hcat(phases[i].basis(), phases[j].basis()), tol));
    else
      out.push_back(phases[r]);
  }
  return out;
}

}  // namespace detail

// Replaces phases i and j by their direct sum: the function with z_i = z_j.
inline ZCollection merge_phases(const ZCollection& c, std::size_t i, std::size_t j,
                                const Tolerance& tol = Tolerance{}) {
  ZCollection out = c;
  out.phases = detail::merge_phase_list(c.phases, i, j, tol);
  return out;
}

inline YCollection merge_phases(const YCollection& c, std::size_t i, std::size_t j,
                                const Tolerance& tol = Tolerance{}) {
  YCollection out = c;
  out.phases = detail::merge_phase_list(c.phases, i, j, tol);
  return out;
}

// Shrinks U to the given subspace, moving the complementary directions into
// J; the new function is the compression of Z to u_sub along that canonical
// complement.
inline ZCollection project_u(const ZCollection& c, const Subspace& u_sub,
                             const Tolerance& tol = Tolerance{}) {
  if (u_sub.ambient_dim() != c.h || !Subspace::from_span(c.u, tol).contains(u_sub.basis(), tol))
    throw Error(errc::not_subspace_of_u, "projection target must lie inside U");
  // canonical complement within U: standard coordinate directions (in the
  // stored u basis) at the non-pivot rows of u_sub's u-coordinates
  const ComplexMatrix coords = coords_in(c.u, u_sub.basis(), tol);
  const Subspace inner = Subspace::from_span(coords, tol);
  std::vector<bool> pivot(c.m(), false);
  {
    const RrefResult r = rref(inner.basis().transpose(), tol);
    for (std::size_t p : r.pivot_cols) pivot[p] = true;
  }
  ComplexMatrix wcols(c.h, 0);
  for (std::size_t r = 0; r < c.m(); ++r)
    if (!pivot[r]) wcols = hcat(wcols, c.u.col(r));

  ZCollection out = c;
  out.u = u_sub.basis();
  out.j = Subspace::from_span(hcat(c.j.basis(), wcols), tol);
  return out;
}

// --- extension -------------------------------------------------------------------

// Adjoins a fresh port space V coupled to U through t: E gains the graph of
// +t, J the graph of -t. In the standard V coordinates the function is
// t Z t^{-1}.
inline YCollection extension(const ZCollection& c, const ComplexMatrix& t,
                             const Tolerance& tol = Tolerance{}) {
  const std::size_t m = c.m();
  if (t.rows() != m || t.cols() != m || !is_invertible(t, tol))
    throw Error(errc::singular_t, "coupling must be nonsingular m x m");
  const std::size_t dim = m + c.h;

  ComplexMatrix eg(dim, m + c.e.dim());
  eg.set_block(0, 0, t);
  eg.set_block(m, 0, c.u);
  eg.set_block(m, m, c.e.basis());

  ComplexMatrix jg(dim, m + c.j.dim());
  jg.set_block(0, 0, cplx(-1.0) * t);
  jg.set_block(m, 0, c.u);
  jg.set_block(m, m, c.j.basis());

  YCollection out;
  out.k = dim;
  out.v = detail::lift_rows(ComplexMatrix::identity(m), dim, 0);
  out.e = Subspace::from_span(eg, tol);
  out.j = Subspace::from_span(jg, tol);
  for (const Subspace& p : c.phases)
    out.phases.push_back(Subspace::from_span(detail::lift_rows(p.basis(), dim, m), tol));
  return out;
}

// --- basis change ----------------------------------------------------------------

// Maps every space through g. The governing basis is mapped too, so the
// associated matrix function is unchanged entry for entry.
inline ZCollection basis_change(const ZCollection& c, const ComplexMatrix& g,
                                const Tolerance& tol = Tolerance{}) {
  if (g.rows() != c.h || g.cols() != c.h || !is_invertible(g, tol))
    throw Error(errc::singular_g, "basis change must be nonsingular on the ambient");
  ZCollection out;
  out.h = c.h;
  out.u = g * c.u;
  out.e = image(g, c.e, tol);
  out.j = image(g, c.j, tol);
  for (const Subspace& p : c.phases) out.phases.push_back(image(g, p, tol));
  return out;
}

inline YCollection basis_change(const YCollection& c, const ComplexMatrix& g,
                                const Tolerance& tol = Tolerance{}) {
  if (g.rows() != c.k || g.cols() != c.k || !is_invertible(g, tol))
    throw Error(errc::singular_g, "basis change must be nonsingular on the ambient");
  YCollection out;
  out.k = c.k;
  out.v = g * c.v;
  out.e = image(g, c.e, tol);
  out.j = image(g, c.j, tol);
  for (const Subspace& p : c.phases) out.phases.push_back(image(g, p, tol));
  return out;
}

inline Superfunction basis_change(const Superfunction& s, const ComplexMatrix& g,
                                  const Tolerance& tol = Tolerance{}) {
  YCollection base = basis_change(s.base, g, tol);
  return make_superfunction(std::move(base), g * s.v_in, g * s.v_out);
}

}  // namespace subalg
