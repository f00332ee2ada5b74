#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "subalg/matrix.hpp"

namespace subalg {

// A subspace of C^n held as a canonical basis matrix (reduced column echelon
// form with unit leading entries). Two subspaces with equal span produce the
// same canonical basis, so subspace equality is a data comparison.
class Subspace {
 public:
  Subspace() : ambient_(0) {}

  static Subspace zero(std::size_t ambient) {
    Subspace s;
    s.ambient_ = ambient;
    s.basis_ = ComplexMatrix(ambient, 0);
    return s;
  }

  static Subspace full(std::size_t ambient, const Tolerance& tol = Tolerance{}) {
    return from_span(ComplexMatrix::identity(ambient), tol);
  }

  // Canonicalizes the span of the given generators; dependent generators are
  // dropped. scale_floor suppresses directions that are numerically zero
  // relative to the computation that produced the generators.
  static Subspace from_span(const ComplexMatrix& generators, const Tolerance& tol = Tolerance{},
                            double scale_floor = 0.0) {
    Subspace s;
    s.ambient_ = generators.rows();
    if (generators.cols() == 0) {
      s.basis_ = ComplexMatrix(s.ambient_, 0);
      return s;
    }
    RrefResult r = rref(generators.transpose(), tol, scale_floor);
    const std::size_t d = r.pivot_cols.size();
    ComplexMatrix b(s.ambient_, d);
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t i = 0; i < s.ambient_; ++i) b(i, k) = r.m(k, i);
    s.basis_ = std::move(b);
    return s;
  }

  std::size_t ambient_dim() const { return ambient_; }
  std::size_t dim() const { return basis_.cols(); }
  const ComplexMatrix& basis() const { return basis_; }

  bool contains(const ComplexMatrix& vecs, const Tolerance& tol = Tolerance{}) const {
    if (vecs.cols() == 0) return true;
    if (dim() == 0) return vecs.max_abs() <= tol.residual_abs;
    try {
      (void)solve_linear(basis_, vecs, tol);
      return true;
    } catch (const Error&) {
      return false;
    }
  }

 private:
  std::size_t ambient_;
  ComplexMatrix basis_;
};

inline bool equal(const Subspace& a, const Subspace& b, double eps = 1e-9) {
  if (a.ambient_dim() != b.ambient_dim() || a.dim() != b.dim()) return false;
  return (a.basis() - b.basis()).max_abs() <= eps;
}

inline Subspace sum(const Subspace& a, const Subspace& b, const Tolerance& tol = Tolerance{}) {
  if (a.ambient_dim() != b.ambient_dim()) fail(errc::dimension_mismatch, "subspace sum ambient");
  return Subspace::from_span(hcat(a.basis(), b.basis()), tol);
}

// Intersection via the kernel of [B1 | -B2]: a null vector (x; y) gives the
// common point B1 x = B2 y. Rank revealing and inner-product free.
inline Subspace intersect(const Subspace& a, const Subspace& b, const Tolerance& tol = Tolerance{}) {
  if (a.ambient_dim() != b.ambient_dim()) fail(errc::dimension_mismatch, "intersect ambient");
  if (a.dim() == 0 || b.dim() == 0) return Subspace::zero(a.ambient_dim());
  ComplexMatrix stacked(a.ambient_dim(), a.dim() + b.dim());
  stacked.set_block(0, 0, a.basis());
  stacked.set_block(0, a.dim(), cplx(-1.0) * b.basis());
  const ComplexMatrix ns = null_space(stacked, tol);
  if (ns.cols() == 0) return Subspace::zero(a.ambient_dim());
  const ComplexMatrix top = ns.block(0, 0, a.dim(), ns.cols());
  const double floor = a.basis().max_abs();
  return Subspace::from_span(a.basis() * top, tol, floor);
}

inline Subspace tensor_product(const Subspace& a, const Subspace& b) {
  return Subspace::from_span(kron(a.basis(), b.basis()));
}

// The span of op applied to s. Directions that vanish at the working
// precision of op are dropped rather than kept as noise.
inline Subspace image(const ComplexMatrix& op, const Subspace& s, const Tolerance& tol = Tolerance{}) {
  if (op.cols() != s.ambient_dim()) fail(errc::dimension_mismatch, "image operator shape");
  const double floor = op.max_abs() * std::max(1.0, s.basis().max_abs());
  return Subspace::from_span(op * s.basis(), tol, floor);
}

// An ordered decomposition of the ambient space into independent parts.
struct DirectSum {
  std::size_t ambient_dim = 0;
  std::vector<Subspace> parts;
};

// Oblique projectors induced by a direct sum: with B the concatenated part
// bases, the i-th projector is B E_i B^{-1} where E_i selects the i-th
// coordinate block. They sum to the identity and annihilate pairwise.
inline std::vector<ComplexMatrix> projectors_from_blocks(const std::vector<ComplexMatrix>& blocks,
                                                         std::size_t ambient,
                                                         const Tolerance& tol = Tolerance{}) {
  ComplexMatrix b(ambient, 0);
  std::vector<std::size_t> offsets;
  for (const ComplexMatrix& blk : blocks) {
    offsets.push_back(b.cols());
    if (blk.cols() > 0) b = hcat(b, blk);
  }
  if (b.cols() != ambient) throw Error(errc::not_direct_sum, "parts do not total the ambient dimension");
  ComplexMatrix binv;
  try {
    binv = inverse(b, tol);
  } catch (const Error&) {
    throw Error(errc::not_direct_sum, "concatenated part bases are singular");
  }
  std::vector<ComplexMatrix> projs;
  projs.reserve(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::size_t d = blocks[i].cols();
    if (d == 0) {
      projs.push_back(ComplexMatrix::zero(ambient, ambient));
      continue;
    }
    projs.push_back(blocks[i] * binv.block(offsets[i], 0, d, ambient));
  }
  return projs;
}

inline std::vector<ComplexMatrix> projectors_of(const DirectSum& d, const Tolerance& tol = Tolerance{}) {
  std::vector<ComplexMatrix> blocks;
  blocks.reserve(d.parts.size());
  for (const Subspace& p : d.parts) {
    if (p.ambient_dim() != d.ambient_dim) fail(errc::dimension_mismatch, "direct sum part ambient");
    blocks.push_back(p.basis());
  }
  return projectors_from_blocks(blocks, d.ambient_dim, tol);
}

inline bool is_direct_sum(const DirectSum& d, const Tolerance& tol = Tolerance{}) {
  try {
    (void)projectors_of(d, tol);
    return true;
  } catch (const Error&) {
    return false;
  }
}

// Coordinates of the columns of `vecs` in the given basis; the columns must
// lie in its span.
inline ComplexMatrix coords_in(const ComplexMatrix& basis, const ComplexMatrix& vecs,
                               const Tolerance& tol = Tolerance{}) {
  return solve_linear(basis, vecs, tol);
}

}  // namespace subalg
