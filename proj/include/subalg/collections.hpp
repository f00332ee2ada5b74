#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "subalg/spaces.hpp"

namespace subalg {

// One scalar per phase; the i-th value binds positionally to phases[i].
struct MaterialAssignment {
  std::vector<cplx> z;

  MaterialAssignment() = default;
  MaterialAssignment(std::initializer_list<cplx> v) : z(v) {}
  explicit MaterialAssignment(std::vector<cplx> v) : z(std::move(v)) {}

  std::size_t size() const { return z.size(); }
  bool all_finite() const {
    for (const cplx& v : z)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }
  static MaterialAssignment ones(std::size_t n) {
    return MaterialAssignment(std::vector<cplx>(n, cplx(1.0, 0.0)));
  }
};

// Ambient H decomposed as U + E + J and as P_1 + ... + P_n. The matrix of the
// associated function is taken in the stored (not canonicalized) u basis, so
// basis changes of the ambient leave it entry-for-entry invariant.
struct ZCollection {
  std::size_t h = 0;
  ComplexMatrix u;  // explicit governing basis, h x m
  Subspace e, j;
  std::vector<Subspace> phases;

  std::size_t m() const { return u.cols(); }
  std::size_t n() const { return phases.size(); }
};

// Ambient K decomposed as E + J and as V + P_1 + ... + P_n. The v basis is
// stored explicitly for the same reason as ZCollection::u.
struct YCollection {
  std::size_t k = 0;
  ComplexMatrix v;  // explicit governing basis, k x m
  Subspace e, j;
  std::vector<Subspace> phases;

  std::size_t m() const { return v.cols(); }
  std::size_t n() const { return phases.size(); }
};

// A Y collection whose V splits into input and output port spaces of equal
// dimension. base.v is always hcat(v_in, v_out).
struct Superfunction {
  YCollection base;
  ComplexMatrix v_in, v_out;

  std::size_t ports() const { return v_in.cols(); }
  std::size_t n() const { return base.n(); }
};

inline Superfunction make_superfunction(YCollection base, ComplexMatrix v_in, ComplexMatrix v_out) {
  Superfunction s;
  s.v_in = std::move(v_in);
  s.v_out = std::move(v_out);
  s.base = std::move(base);
  s.base.v = hcat(s.v_in, s.v_out);
  return s;
}

// --- projector bundles -----------------------------------------------------

struct ZProjectors {
  ComplexMatrix g0, g1, g2;             // onto U, E, J
  std::vector<ComplexMatrix> lambdas;   // onto the phases
};

struct YProjectors {
  ComplexMatrix g1, g2;                 // onto E, J
  ComplexMatrix pi1, pi2;               // onto V, H
  std::vector<ComplexMatrix> lambdas;   // onto the phases
};

inline ComplexMatrix phase_concat(const std::vector<Subspace>& phases, std::size_t ambient) {
  ComplexMatrix b(ambient, 0);
  for (const Subspace& p : phases)
    if (p.dim() > 0) b = hcat(b, p.basis());
  return b;
}

inline ZProjectors projectors(const ZCollection& c, const Tolerance& tol = Tolerance{}) {
  ZProjectors zp;
  auto uej = projectors_from_blocks({c.u, c.e.basis(), c.j.basis()}, c.h, tol);
  zp.g0 = uej[0];
  zp.g1 = uej[1];
  zp.g2 = uej[2];
  std::vector<ComplexMatrix> blocks;
  for (const Subspace& p : c.phases) blocks.push_back(p.basis());
  zp.lambdas = projectors_from_blocks(blocks, c.h, tol);
  return zp;
}

inline YProjectors projectors(const YCollection& c, const Tolerance& tol = Tolerance{}) {
  YProjectors yp;
  auto ej = projectors_from_blocks({c.e.basis(), c.j.basis()}, c.k, tol);
  yp.g1 = ej[0];
  yp.g2 = ej[1];
  std::vector<ComplexMatrix> blocks{c.v};
  for (const Subspace& p : c.phases) blocks.push_back(p.basis());
  auto vph = projectors_from_blocks(blocks, c.k, tol);
  yp.pi1 = vph[0];
  yp.pi2 = ComplexMatrix::identity(c.k) - yp.pi1;
  yp.lambdas.assign(vph.begin() + 1, vph.end());
  return yp;
}

// L = sum_i z_i Lambda_i; the identity when every z_i is one.
inline ComplexMatrix l_operator(const std::vector<ComplexMatrix>& lambdas, const MaterialAssignment& z,
                                std::size_t ambient) {
  if (lambdas.size() != z.size()) fail(errc::dimension_mismatch, "material count != phase count");
  ComplexMatrix l = ComplexMatrix::zero(ambient, ambient);
  for (std::size_t i = 0; i < z.size(); ++i) l += z.z[i] * lambdas[i];
  return l;
}

inline ComplexMatrix l_operator(const ZCollection& c, const MaterialAssignment& z,
                                const Tolerance& tol = Tolerance{}) {
  if (c.n() != z.size()) fail(errc::dimension_mismatch, "material count != phase count");
  ZProjectors zp = projectors(c, tol);
  ComplexMatrix l = ComplexMatrix::zero(c.h, c.h);
  for (std::size_t i = 0; i < z.size(); ++i) l += z.z[i] * zp.lambdas[i];
  return l;
}

inline ComplexMatrix l_operator(const YCollection& c, const MaterialAssignment& z,
                                const Tolerance& tol = Tolerance{}) {
  if (c.n() != z.size()) fail(errc::dimension_mismatch, "material count != phase count");
  YProjectors yp = projectors(c, tol);
  ComplexMatrix l = ComplexMatrix::zero(c.k, c.k);
  for (std::size_t i = 0; i < z.size(); ++i) l += z.z[i] * yp.lambdas[i];
  return l;
}

// --- validation ------------------------------------------------------------

struct ValidationItem {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationItem> items;

  void add(std::string name, bool pass, std::string detail = "") {
    items.push_back({std::move(name), pass, std::move(detail)});
  }
  bool all_pass() const {
    for (const ValidationItem& i : items)
      if (!i.pass) return false;
    return true;
  }
  // Structural conditions are the ones every usable collection must satisfy;
  // the inverse-problem conditions (V/E, V/J intersections) are reported but
  // may legitimately fail, e.g. for the additive zero.
  bool structural_pass() const {
    for (const ValidationItem& i : items)
      if (!i.pass && i.name.rfind("direct_sum", 0) == 0) return false;
    return true;
  }
};

namespace detail {
inline bool direct_sum_ok(const std::vector<ComplexMatrix>& blocks, std::size_t ambient,
                          const Tolerance& tol) {
  try {
    (void)projectors_from_blocks(blocks, ambient, tol);
    return true;
  } catch (const Error&) {
    return false;
  }
}
}  // namespace detail

inline ValidationReport validate(const ZCollection& c, const Tolerance& tol = Tolerance{}) {
  ValidationReport r;
  const bool uej = detail::direct_sum_ok({c.u, c.e.basis(), c.j.basis()}, c.h, tol);
  r.add("direct_sum_u_e_j", uej,
        "dims " + std::to_string(c.m()) + "+" + std::to_string(c.e.dim()) + "+" +
            std::to_string(c.j.dim()) + " of " + std::to_string(c.h));
  std::vector<ComplexMatrix> blocks;
  for (const Subspace& p : c.phases) blocks.push_back(p.basis());
  r.add("direct_sum_phases", detail::direct_sum_ok(blocks, c.h, tol));
  r.add("u_full_rank", rank(c.u, tol) == c.m());
  bool finite = c.u.is_finite() && c.e.basis().is_finite() && c.j.basis().is_finite();
  for (const Subspace& p : c.phases) finite = finite && p.basis().is_finite();
  r.add("entries_finite", finite);
  return r;
}

inline ValidationReport validate(const YCollection& c, const Tolerance& tol = Tolerance{}) {
  ValidationReport r;
  r.add("direct_sum_e_j", detail::direct_sum_ok({c.e.basis(), c.j.basis()}, c.k, tol));
  std::vector<ComplexMatrix> blocks{c.v};
  for (const Subspace& p : c.phases) blocks.push_back(p.basis());
  r.add("direct_sum_v_phases", detail::direct_sum_ok(blocks, c.k, tol));
  r.add("v_full_rank", rank(c.v, tol) == c.m());
  const Subspace vsub = Subspace::from_span(c.v, tol);
  const std::size_t vj = intersect(vsub, c.j, tol).dim();
  r.add("v_cap_j_zero", vj == 0, "dim " + std::to_string(vj));
  const std::size_t ve = intersect(vsub, c.e, tol).dim();
  r.add("v_cap_e_zero", ve == 0, "dim " + std::to_string(ve));
  bool finite = c.v.is_finite() && c.e.basis().is_finite() && c.j.basis().is_finite();
  for (const Subspace& p : c.phases) finite = finite && p.basis().is_finite();
  r.add("entries_finite", finite);
  return r;
}

inline ValidationReport validate(const Superfunction& s, const Tolerance& tol = Tolerance{}) {
  ValidationReport r = validate(s.base, tol);
  const std::size_t mu = s.ports();
  r.add("equal_port_dims", s.v_in.cols() == s.v_out.cols());
  // Port condition: the joint projection onto v_in and v_out must be
  // surjective from E and from J, i.e. every quadruple of port vectors is
  // attainable.
  try {
    YProjectors yp = projectors(s.base, tol);
    const ComplexMatrix pe = yp.pi1 * s.base.e.basis();
    const ComplexMatrix pj = yp.pi1 * s.base.j.basis();
    r.add("port_condition_e", rank(pe, tol) == 2 * mu);
    r.add("port_condition_j", rank(pj, tol) == 2 * mu);
  } catch (const Error&) {
    r.add("port_condition_e", false, "projectors unavailable");
    r.add("port_condition_j", false, "projectors unavailable");
  }
  return r;
}

}  // namespace subalg
