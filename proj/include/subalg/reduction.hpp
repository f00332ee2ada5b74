#pragma once

#include <functional>
#include <optional>
#include <string>

#include "subalg/algebra.hpp"
#include "subalg/solvers.hpp"

namespace subalg {

namespace detail {

// Applies a reference transformation inside the expansion driver, recording
// the variable rescaling it induces so evaluation can undo it.
inline YCollection hook_transform(const YCollection& c, const ScalingVector& sv,
                                  const Tolerance& tol, std::vector<cplx>& scale) {
  YCollection out = reference_transform(c, sv, tol);
  for (std::size_t i = 0; i < sv.c_e.size(); ++i) scale[i] = sv.c_e[i] / sv.c_j[i];
  return out;
}

}  // namespace detail

// --- pruning -----------------------------------------------------------------

struct PruneReport {
  std::vector<std::size_t> old_dims, new_dims;  // ambient, governing, q1, q2, p_1..p_n
  std::size_t iterations = 0;
};

namespace detail {

inline std::vector<std::size_t> z_dims(const ZCollection& c) {
  std::vector<std::size_t> d{c.h, c.m(), c.e.dim(), c.j.dim()};
  for (const Subspace& p : c.phases) d.push_back(p.dim());
  return d;
}

inline std::vector<std::size_t> y_dims(const YCollection& c) {
  std::vector<std::size_t> d{c.k, c.m(), c.e.dim(), c.j.dim()};
  for (const Subspace& p : c.phases) d.push_back(p.dim());
  return d;
}

// Smallest subspace containing `seed` closed under g1 and every lambda.
inline Subspace closure(Subspace seed, const ComplexMatrix& g1,
                        const std::vector<ComplexMatrix>& lambdas, std::size_t ambient,
                        std::size_t* iterations, const Tolerance& tol) {
  std::size_t iters = 0;
  for (; iters <= ambient; ++iters) {
    Subspace next = sum(seed, image(g1, seed, tol), tol);
    for (const ComplexMatrix& l : lambdas) next = sum(next, image(l, seed, tol), tol);
    if (next.dim() == seed.dim()) break;
    seed = next;
  }
  if (iterations) *iterations = iters;
  return seed;
}

}  // namespace detail

// Shrinks the ambient to the closure of U under the E-projector and the phase
// projectors, then re-derives every space by projecting the closure. The
// associated function is unchanged.
inline std::pair<ZCollection, PruneReport> prune_z(const ZCollection& c,
                                                   const Tolerance& tol = Tolerance{}) {
  ZProjectors zp = projectors(c, tol);
  PruneReport rep;
  rep.old_dims = detail::z_dims(c);
  const Subspace s =
      detail::closure(Subspace::from_span(c.u, tol), zp.g1, zp.lambdas, c.h, &rep.iterations, tol);
  const ComplexMatrix& b = s.basis();

  ZCollection out;
  out.h = s.dim();
  out.u = coords_in(b, c.u, tol);
  out.e = Subspace::from_span(coords_in(b, image(zp.g1, s, tol).basis(), tol), tol);
  out.j = Subspace::from_span(coords_in(b, image(zp.g2, s, tol).basis(), tol), tol);
  for (const ComplexMatrix& l : zp.lambdas)
    out.phases.push_back(Subspace::from_span(coords_in(b, image(l, s, tol).basis(), tol), tol));
  rep.new_dims = detail::z_dims(out);
  return {std::move(out), std::move(rep)};
}

inline std::pair<YCollection, PruneReport> prune_y(const YCollection& c,
                                                   const Tolerance& tol = Tolerance{}) {
  YProjectors yp = projectors(c, tol);
  PruneReport rep;
  rep.old_dims = detail::y_dims(c);
  const Subspace s =
      detail::closure(Subspace::from_span(c.v, tol), yp.g1, yp.lambdas, c.k, &rep.iterations, tol);
  const ComplexMatrix& b = s.basis();

  YCollection out;
  out.k = s.dim();
  out.v = coords_in(b, c.v, tol);
  out.e = Subspace::from_span(coords_in(b, image(yp.g1, s, tol).basis(), tol), tol);
  out.j = Subspace::from_span(coords_in(b, image(yp.g2, s, tol).basis(), tol), tol);
  for (const ComplexMatrix& l : yp.lambdas)
    out.phases.push_back(Subspace::from_span(coords_in(b, image(l, s, tol).basis(), tol), tol));
  rep.new_dims = detail::y_dims(out);
  return {std::move(out), std::move(rep)};
}

// --- normalization (Y -> Z) ----------------------------------------------------

struct NormalizationResult {
  ZCollection z;
  ComplexMatrix m_map;  // maps the new U coordinates to the stored V coordinates
  ComplexMatrix k_map;  // maps the stored V coordinates to the new U coordinates
};

// Reverses extension: carves the Z collection living on the phase span out of
// a Y collection. The functions are linked by Y(z) = M Z(z) K, in particular
// Y(1,...,1) = M K.
inline NormalizationResult normalize_y(const YCollection& c, const Tolerance& tol = Tolerance{}) {
  const std::size_t m = c.m();
  YProjectors yp = projectors(c, tol);
  const ComplexMatrix hb = phase_concat(c.phases, c.k);
  const Subspace hsub = Subspace::from_span(hb, tol);
  const Subspace vsub = Subspace::from_span(c.v, tol);
  const Subspace tilde_e = image(yp.g1, vsub, tol);
  const Subspace tilde_j = image(yp.g2, vsub, tol);

  auto check = [&](bool ok, const std::string& name, std::size_t dim) {
    if (!ok)
      throw Error(errc::assumption_violated,
                  "normalization requires " + name + " (offending dimension " +
                      std::to_string(dim) + ")");
  };
  std::size_t d = intersect(hsub, tilde_e, tol).dim();
  check(d == 0, "H meet G1(V) = 0", d);
  d = intersect(vsub, c.j, tol).dim();
  check(d == 0, "V meet J = 0", d);
  d = intersect(hsub, tilde_j, tol).dim();
  check(d == 0, "H meet G2(V) = 0", d);
  d = intersect(vsub, c.e, tol).dim();
  check(d == 0, "V meet E = 0", d);

  const Subspace usub = image(yp.pi2 * yp.g1, vsub, tol);
  check(usub.dim() == m, "a full-dimensional image of V in H", usub.dim());

  const Subspace e_new = intersect(c.e, hsub, tol);
  const Subspace j_new = intersect(c.j, hsub, tol);

  // K from the decomposition v = -e + eTilde with e in U. M carries the
  // opposite sign of the analogous u = -j1 + jTilde split so that the output
  // convention J1 = -Y E1 leaves Y(z) = M Z(z) K and Y(1,...,1) = M K.
  ComplexMatrix k_map(m, m), m_map(m, m);
  {
    const ComplexMatrix sys = hcat(usub.basis(), tilde_e.basis());
    const ComplexMatrix sol = solve_linear(sys, c.v, tol);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t r = 0; r < m; ++r) k_map(r, i) = -sol(r, i);
  }
  {
    const ComplexMatrix sys = hcat(c.v, tilde_j.basis());
    const ComplexMatrix sol = solve_linear(sys, usub.basis(), tol);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t r = 0; r < m; ++r) m_map(r, i) = sol(r, i);
  }

  NormalizationResult res;
  res.m_map = std::move(m_map);
  res.k_map = std::move(k_map);
  res.z.h = hsub.dim();
  const ComplexMatrix& b = hsub.basis();
  res.z.u = coords_in(b, usub.basis(), tol);
  res.z.e = Subspace::from_span(coords_in(b, e_new.basis(), tol), tol);
  res.z.j = Subspace::from_span(coords_in(b, j_new.basis(), tol), tol);
  for (const Subspace& p : c.phases)
    res.z.phases.push_back(Subspace::from_span(coords_in(b, p.basis(), tol), tol));
  if (!validate(res.z, tol).structural_pass())
    throw Error(errc::assumption_violated, "normalized collection is degenerate");
  return res;
}

// --- reduction (Z -> Y) ----------------------------------------------------------

struct ReductionResult {
  YCollection y;
  // w[i] is the m x m compression of the i-th phase projector to U (for the
  // first n-1 phases); column j holds the U coordinates of G0 Lambda_i u_j.
  std::vector<ComplexMatrix> w;
};

// The m x m compressions entering the reduced evaluation formula; they are
// exactly the first-order response of Z about the all-equal material point.
inline std::vector<ComplexMatrix> phase_compressions(const ZCollection& c,
                                                     const Tolerance& tol = Tolerance{}) {
  ZProjectors zp = projectors(c, tol);
  std::vector<ComplexMatrix> w;
  for (std::size_t i = 0; i + 1 < c.n(); ++i)
    w.push_back(coords_in(c.u, zp.g0 * (zp.lambdas[i] * c.u), tol));
  return w;
}

// Moves the problem onto K = E + J: V collects the off-U parts of the phase
// images of U and the phases shrink to their intersections with K. The
// original Z is recovered from the reduced Y by the Schur-complement style
// formula implemented in reduction_z_formula.
inline ReductionResult reduce_z(const ZCollection& c, const Tolerance& tol = Tolerance{}) {
  const std::size_t m = c.m(), n = c.n();
  ZProjectors zp = projectors(c, tol);
  const ComplexMatrix bk = hcat(c.e.basis(), c.j.basis());
  const Subspace ksub = Subspace::from_span(bk, tol);

  for (std::size_t i = 0; i < n; ++i) {
    const Subspace pt = image(zp.lambdas[i], Subspace::from_span(c.u, tol), tol);
    if (pt.dim() != m)
      throw Error(errc::assumption_violated,
                  "phase " + std::to_string(i + 1) + " does not see all of U");
    if (intersect(pt, ksub, tol).dim() != 0)
      throw Error(errc::assumption_violated,
                  "phase image of U meets E + J at phase " + std::to_string(i + 1));
  }

  ReductionResult res;
  ComplexMatrix vbasis(c.h, m * (n - 1));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    ComplexMatrix wi(m, m);
    for (std::size_t j = 0; j < m; ++j) {
      const ComplexMatrix vec = zp.lambdas[i] * c.u.col(j);
      const ComplexMatrix upart = zp.g0 * vec;
      const ComplexMatrix ucoords = coords_in(c.u, upart, tol);
      for (std::size_t k = 0; k < m; ++k) wi(k, j) = ucoords(k, 0);
      vbasis.set_block(0, i * m + j, vec - upart);
    }
    res.w.push_back(std::move(wi));
  }

  res.y.k = ksub.dim();
  res.y.v = coords_in(bk, vbasis, tol);
  if (rank(res.y.v, tol) != m * (n - 1))
    throw Error(errc::assumption_violated, "phase images of U are dependent");
  ComplexMatrix e_coords(ksub.dim(), c.e.dim());
  e_coords.set_block(0, 0, ComplexMatrix::identity(c.e.dim()));
  ComplexMatrix j_coords(ksub.dim(), c.j.dim());
  j_coords.set_block(c.e.dim(), 0, ComplexMatrix::identity(c.j.dim()));
  res.y.e = Subspace::from_span(e_coords, tol);
  res.y.j = Subspace::from_span(j_coords, tol);
  for (const Subspace& p : c.phases) {
    const Subspace cut = intersect(p, ksub, tol);
    res.y.phases.push_back(Subspace::from_span(coords_in(bk, cut.basis(), tol), tol));
  }
  if (!validate(res.y, tol).structural_pass())
    throw Error(errc::assumption_violated, "reduced collection is degenerate");
  return res;
}

// Evaluates Z from the reduced data: Z = A - C (Y + D)^{-1} B where A, B, C,
// D are assembled from the phase compressions. Pass an empty Y (0 x 0) when
// the correction space is zero-dimensional; then Z = A exactly.
inline ComplexMatrix reduction_z_formula(const std::vector<ComplexMatrix>& w, std::size_t m,
                                         std::size_t n, const ComplexMatrix& y,
                                         const MaterialAssignment& z,
                                         const Tolerance& tol = Tolerance{}) {
  if (z.size() != n) fail(errc::dimension_mismatch, "material count != phase count");
  const cplx zn = z.z[n - 1];
  ComplexMatrix a = zn * ComplexMatrix::identity(m);
  for (std::size_t i = 0; i + 1 < n; ++i) a += (z.z[i] - zn) * w[i];
  const std::size_t mv = m * (n - 1);
  if (mv == 0 || y.rows() == 0) return a;
  if (y.rows() != mv || y.cols() != mv) fail(errc::dimension_mismatch, "reduced Y shape");

  auto wij = [&](std::size_t i, std::size_t j, std::size_t k) { return w[i](k, j); };
  auto idx = [&](std::size_t i, std::size_t j) { return i * m + j; };

  ComplexMatrix b(mv, m);  // V <- U
  for (std::size_t p = 0; p + 1 < n; ++p)
    for (std::size_t k = 0; k < m; ++k) b(idx(p, k), k) = z.z[p] - zn;

  ComplexMatrix cmat(m, mv);  // U <- V
  for (std::size_t p = 0; p + 1 < n; ++p) {
    const cplx f = z.z[p] - zn;
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t q = 0; q < m; ++q) {
          cplx s(0.0, 0.0);
          for (std::size_t k = 0; k < m; ++k) {
            const cplx sel = (p == i && k == j) ? cplx(1.0) : cplx(0.0);
            s += (sel - wij(i, j, k)) * wij(p, k, q);
          }
          cmat(q, idx(i, j)) += f * s;
        }
  }

  ComplexMatrix dmat = zn * ComplexMatrix::identity(mv);  // V <- V
  for (std::size_t p = 0; p + 1 < n; ++p) {
    const cplx f = z.z[p] - zn;
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k) {
          const cplx sel = (p == i && k == j) ? cplx(1.0) : cplx(0.0);
          dmat(idx(p, k), idx(i, j)) += f * (sel - wij(i, j, k));
        }
  }

  ComplexMatrix inv_yd;
  try {
    inv_yd = inverse(y + dmat, tol);
  } catch (const Error&) {
    throw Error(errc::singular_resolvent, "reduced correction operator is singular");
  }
  return a - cmat * inv_yd * b;
}

// --- continued fraction ------------------------------------------------------------

struct CFLevel {
  std::size_t level = 0;
  std::size_t m = 0;  // dim U entering this level
  std::size_t n = 0;  // phase count (constant down the expansion)
  std::vector<ComplexMatrix> w;
  bool normalized = false;      // reduction and normalization both succeeded
  ComplexMatrix m_map, k_map;   // present when normalized
  std::vector<std::size_t> dims;  // ambient, m, q1, q2, p_1..p_n entering this level
  std::vector<cplx> hook_scale;   // per-variable rescaling applied at this level
};

enum class CFStop {
  zero_dimension,          // the remaining correction space vanished: exact closed form
  max_depth,               // depth limit reached; terminal collection retained
  reduction_blocked,       // a reduction assumption failed; terminal Z retained
  normalization_blocked,   // a normalization assumption failed; terminal Y retained
};

inline const char* cf_stop_name(CFStop s) {
  switch (s) {
    case CFStop::zero_dimension: return "zero_dimension";
    case CFStop::max_depth: return "max_depth";
    case CFStop::reduction_blocked: return "reduction_blocked";
    case CFStop::normalization_blocked: return "normalization_blocked";
  }
  return "unknown";
}

struct CFExpansion {
  std::vector<CFLevel> levels;
  CFStop stop = CFStop::zero_dimension;
  std::string stop_detail;
  std::optional<ZCollection> terminal_z;
  std::optional<YCollection> terminal_y;
};

// Optional per-level reference transformation, applied to the reduced Y
// collection before normalization. No default policy is imposed.
using CFHook = std::function<std::optional<ScalingVector>(std::size_t level, const YCollection&)>;

inline CFExpansion continued_fraction(const ZCollection& c, std::size_t max_depth,
                                      const Tolerance& tol = Tolerance{},
                                      const CFHook& hook = CFHook{}) {
  CFExpansion exp;
  ZCollection cur = c;
  for (;;) {
    CFLevel level;
    level.level = exp.levels.size();
    level.m = cur.m();
    level.n = cur.n();
    level.dims = detail::z_dims(cur);
    level.w = phase_compressions(cur, tol);
    level.hook_scale.assign(cur.n(), cplx(1.0, 0.0));

    if (cur.e.dim() == 0 || cur.n() <= 1 || cur.m() == 0) {
      // the closed form Z = A is exact here
      exp.levels.push_back(std::move(level));
      exp.stop = CFStop::zero_dimension;
      return exp;
    }
    if (exp.levels.size() >= max_depth) {
      exp.stop = CFStop::max_depth;
      exp.stop_detail = "depth limit " + std::to_string(max_depth);
      exp.terminal_z = cur;
      return exp;
    }

    ReductionResult red;
    try {
      red = reduce_z(cur, tol);
    } catch (const Error& e) {
      exp.stop = CFStop::reduction_blocked;
      exp.stop_detail = e.what();
      exp.terminal_z = cur;
      return exp;
    }

    YCollection ycur = std::move(red.y);
    if (hook) {
      if (std::optional<ScalingVector> sv = hook(level.level, ycur)) {
        ycur = detail::hook_transform(ycur, *sv, tol, level.hook_scale);
      }
    }

    NormalizationResult norm;
    try {
      norm = normalize_y(ycur, tol);
    } catch (const Error& e) {
      level.w = std::move(red.w);
      exp.levels.push_back(std::move(level));
      exp.stop = CFStop::normalization_blocked;
      exp.stop_detail = e.what();
      exp.terminal_y = std::move(ycur);
      return exp;
    }
    level.w = std::move(red.w);
    level.normalized = true;
    level.m_map = std::move(norm.m_map);
    level.k_map = std::move(norm.k_map);
    exp.levels.push_back(std::move(level));
    cur = std::move(norm.z);
  }
}

// Back-substitutes the recursion from the deepest available object up to the
// top. Exact whenever the stop reason retained a terminal collection (it is
// solved directly) or the expansion closed at dimension zero.
inline ComplexMatrix cf_evaluate(const CFExpansion& exp, const MaterialAssignment& z,
                                 const Tolerance& tol = Tolerance{}) {
  const std::size_t depth = exp.levels.size();
  // material assignments per level, adjusted by any hook rescalings
  std::vector<MaterialAssignment> zs(depth + 1);
  zs[0] = z;
  for (std::size_t i = 0; i < depth; ++i) {
    std::vector<cplx> next = zs[i].z;
    for (std::size_t v = 0; v < next.size(); ++v) next[v] /= exp.levels[i].hook_scale[v];
    zs[i + 1] = MaterialAssignment(next);
  }

  ComplexMatrix zmat;
  std::size_t start;
  switch (exp.stop) {
    case CFStop::zero_dimension: {
      const CFLevel& last = exp.levels.back();
      zmat = reduction_z_formula(last.w, last.m, last.n, ComplexMatrix(), zs[depth - 1], tol);
      start = depth - 1;
      break;
    }
    case CFStop::normalization_blocked: {
      const CFLevel& last = exp.levels.back();
      const ComplexMatrix y = solve_y(*exp.terminal_y, zs[depth], SolveOptions{}, tol).value;
      zmat = reduction_z_formula(last.w, last.m, last.n, y, zs[depth - 1], tol);
      start = depth - 1;
      break;
    }
    case CFStop::max_depth:
    case CFStop::reduction_blocked: {
      zmat = solve_z(*exp.terminal_z, zs[depth], SolveOptions{}, tol).value;
      start = depth;
      break;
    }
    default:
      fail(errc::invalid_argument, "unknown stop reason");
  }

  for (std::size_t i = start; i-- > 0;) {
    const CFLevel& lv = exp.levels[i];
    const ComplexMatrix y = lv.m_map * zmat * lv.k_map;
    zmat = reduction_z_formula(lv.w, lv.m, lv.n, y, zs[i], tol);
  }
  return zmat;
}

// Approximate evaluation that cuts the recursion after `depth` levels,
// dropping the correction term at the cut. Near the all-equal material point
// the error shrinks as the cut moves deeper.
inline ComplexMatrix cf_evaluate_truncated(const CFExpansion& exp, const MaterialAssignment& z,
                                           std::size_t depth, const Tolerance& tol = Tolerance{}) {
  if (depth >= exp.levels.size()) return cf_evaluate(exp, z, tol);
  std::vector<MaterialAssignment> zs(depth + 1);
  zs[0] = z;
  for (std::size_t i = 0; i < depth; ++i) {
    std::vector<cplx> next = zs[i].z;
    for (std::size_t v = 0; v < next.size(); ++v) next[v] /= exp.levels[i].hook_scale[v];
    zs[i + 1] = MaterialAssignment(next);
  }
  const CFLevel& cut = exp.levels[depth];
  ComplexMatrix zmat = reduction_z_formula(cut.w, cut.m, cut.n, ComplexMatrix(), zs[depth], tol);
  for (std::size_t i = depth; i-- > 0;) {
    const CFLevel& lv = exp.levels[i];
    const ComplexMatrix y = lv.m_map * zmat * lv.k_map;
    zmat = reduction_z_formula(lv.w, lv.m, lv.n, y, zs[i], tol);
  }
  return zmat;
}

}  // namespace subalg
