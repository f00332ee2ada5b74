#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "subalg/error.hpp"

namespace subalg {

using cplx = std::complex<double>;

// Thresholds used by all rank and residual decisions.
// rank_rel is relative to the largest pivot seen during elimination, so rank
// decisions are invariant under scalar rescaling of the input.
struct Tolerance {
  double rank_rel = 1e-10;
  double residual_abs = 1e-9;
};

// Dense complex matrix, row-major. The universal carrier for operators,
// bases and coordinate blocks. Values are immutable by convention once they
// leave a constructor: all operations return fresh matrices.
class ComplexMatrix {
 public:
  ComplexMatrix() : rows_(0), cols_(0) {}
  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols, cplx(0.0, 0.0)) {}
  ComplexMatrix(std::size_t rows, std::size_t cols, std::initializer_list<cplx> entries)
      : rows_(rows), cols_(cols), a_(entries) {
    if (a_.size() != rows * cols) fail(errc::invalid_argument, "entry count mismatch");
  }

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static ComplexMatrix zero(std::size_t rows, std::size_t cols) { return ComplexMatrix(rows, cols); }
  static ComplexMatrix column(const std::vector<cplx>& v) {
    ComplexMatrix m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  cplx& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  ComplexMatrix transpose() const {
    ComplexMatrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
  }

  ComplexMatrix conj_transpose() const {
    ComplexMatrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(j, i) = std::conj((*this)(i, j));
    return r;
  }

  ComplexMatrix block(std::size_t i0, std::size_t j0, std::size_t r, std::size_t c) const {
    ComplexMatrix b(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) b(i, j) = (*this)(i0 + i, j0 + j);
    return b;
  }

  void set_block(std::size_t i0, std::size_t j0, const ComplexMatrix& b) {
    for (std::size_t i = 0; i < b.rows(); ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) (*this)(i0 + i, j0 + j) = b(i, j);
  }

  ComplexMatrix col(std::size_t j) const { return block(0, j, rows_, 1); }

  std::vector<cplx> col_vector(std::size_t j) const {
    std::vector<cplx> v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
  }

  double max_abs() const {
    double m = 0.0;
    for (const cplx& x : a_) m = std::max(m, std::abs(x));
    return m;
  }

  double fro_norm() const {
    double s = 0.0;
    for (const cplx& x : a_) s += std::norm(x);
    return std::sqrt(s);
  }

  bool is_finite() const {
    for (const cplx& x : a_)
      if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
    return true;
  }

  ComplexMatrix& operator+=(const ComplexMatrix& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  ComplexMatrix& operator-=(const ComplexMatrix& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  ComplexMatrix& operator*=(cplx s) {
    for (cplx& x : a_) x *= s;
    return *this;
  }

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
  friend ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator*(ComplexMatrix a, cplx s) { return a *= s; }

  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) fail(errc::dimension_mismatch, "matrix product shape");
    ComplexMatrix r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t k = 0; k < a.cols(); ++k) {
        const cplx aik = a(i, k);
        if (aik == cplx(0.0, 0.0)) continue;
        for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
      }
    return r;
  }

 private:
  void require_same_shape(const ComplexMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) fail(errc::dimension_mismatch, "matrix shapes differ");
  }

  std::size_t rows_, cols_;
  std::vector<cplx> a_;
};

inline ComplexMatrix hcat(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.empty() && a.rows() == 0) return b;
  if (b.empty() && b.rows() == 0) return a;
  if (a.rows() != b.rows()) fail(errc::dimension_mismatch, "hcat row mismatch");
  ComplexMatrix r(a.rows(), a.cols() + b.cols());
  r.set_block(0, 0, a);
  r.set_block(0, a.cols(), b);
  return r;
}

inline ComplexMatrix vcat(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.cols()) fail(errc::dimension_mismatch, "vcat col mismatch");
  ComplexMatrix r(a.rows() + b.rows(), a.cols());
  r.set_block(0, 0, a);
  r.set_block(a.rows(), 0, b);
  return r;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const cplx s = a(i, j);
      if (s == cplx(0.0, 0.0)) continue;
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q)
          r(i * b.rows() + p, j * b.cols() + q) = s * b(p, q);
    }
  return r;
}

// Row echelon reduction state. Pivot positions are scanned left to right so
// the reduced matrix is the unique RREF of the input: this is what makes the
// subspace canonical form a pure data comparison.
struct RrefResult {
  ComplexMatrix m;
  std::vector<std::size_t> pivot_cols;
  double scale = 0.0;  // largest |entry| of the input
};

// scale_floor guards reductions of matrices that are themselves the result
// of cancellation: entries below rank_rel * scale_floor are treated as zero
// even when they dominate the matrix.
inline RrefResult rref(ComplexMatrix a, const Tolerance& tol, double scale_floor = 0.0) {
  RrefResult res;
  res.scale = a.max_abs();
  const double ref = std::max(res.scale, scale_floor);
  const double cut = tol.rank_rel * (ref > 0.0 ? ref : 1.0);
  const std::size_t rows = a.rows(), cols = a.cols();
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t piv = r;
    double best = std::abs(a(r, c));
    for (std::size_t i = r + 1; i < rows; ++i) {
      const double v = std::abs(a(i, c));
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (best <= cut) {
      for (std::size_t i = r; i < rows; ++i) a(i, c) = 0.0;
      continue;
    }
    if (piv != r)
      for (std::size_t j = 0; j < cols; ++j) std::swap(a(r, j), a(piv, j));
    const cplx inv = 1.0 / a(r, c);
    for (std::size_t j = 0; j < cols; ++j) a(r, j) *= inv;
    a(r, c) = 1.0;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r) continue;
      const cplx f = a(i, c);
      if (f == cplx(0.0, 0.0)) continue;
      for (std::size_t j = 0; j < cols; ++j) a(i, j) -= f * a(r, j);
      a(i, c) = 0.0;
    }
    res.pivot_cols.push_back(c);
    ++r;
  }
  res.m = std::move(a);
  return res;
}

inline std::size_t rank(const ComplexMatrix& m, const Tolerance& tol = Tolerance{}) {
  if (m.empty()) return 0;
  return rref(m, tol).pivot_cols.size();
}

// Columns span the kernel of m; empty (0-column) result for injective m.
inline ComplexMatrix null_space(const ComplexMatrix& m, const Tolerance& tol = Tolerance{}) {
  const std::size_t n = m.cols();
  if (m.rows() == 0) return ComplexMatrix::identity(n);
  RrefResult r = rref(m, tol);
  std::vector<bool> is_pivot(n, false);
  for (std::size_t c : r.pivot_cols) is_pivot[c] = true;
  std::vector<std::size_t> free_cols;
  for (std::size_t c = 0; c < n; ++c)
    if (!is_pivot[c]) free_cols.push_back(c);
  ComplexMatrix ns(n, free_cols.size());
  for (std::size_t k = 0; k < free_cols.size(); ++k) {
    const std::size_t fc = free_cols[k];
    ns(fc, k) = 1.0;
    for (std::size_t pi = 0; pi < r.pivot_cols.size(); ++pi) ns(r.pivot_cols[pi], k) = -r.m(pi, fc);
  }
  return ns;
}

// Solves a x = b for square or overdetermined consistent systems. Free
// variables (rank-deficient but consistent a) are set to zero. Throws
// Singular when no solution reproduces b within residual_abs.
inline ComplexMatrix solve_linear(const ComplexMatrix& a, const ComplexMatrix& b,
                                  const Tolerance& tol = Tolerance{}) {
  if (a.rows() != b.rows()) fail(errc::dimension_mismatch, "solve_linear shapes");
  RrefResult r = rref(hcat(a, b), tol);
  ComplexMatrix x(a.cols(), b.cols());
  for (std::size_t pi = 0; pi < r.pivot_cols.size(); ++pi) {
    const std::size_t pc = r.pivot_cols[pi];
    if (pc >= a.cols()) throw Error(errc::singular, "inconsistent linear system");
    for (std::size_t j = 0; j < b.cols(); ++j) x(pc, j) = r.m(pi, a.cols() + j);
  }
  const ComplexMatrix resid = a * x - b;
  const double scale = std::max({a.max_abs(), b.max_abs(), 1.0});
  if (resid.max_abs() > tol.residual_abs * scale)
    throw Error(errc::singular, "linear solve residual too large");
  return x;
}

inline ComplexMatrix inverse(const ComplexMatrix& a, const Tolerance& tol = Tolerance{}) {
  if (a.rows() != a.cols()) fail(errc::dimension_mismatch, "inverse of non-square");
  return solve_linear(a, ComplexMatrix::identity(a.rows()), tol);
}

inline bool is_invertible(const ComplexMatrix& a, const Tolerance& tol = Tolerance{}) {
  return a.rows() == a.cols() && rank(a, tol) == a.rows();
}

// Inverts the compression of `a` to span(s_basis): the returned operator maps
// the whole space into span(s_basis), acts as the inverse of a there, and is
// the ambient-space form of an inverse "taken on a subspace". Requires that a
// maps span(s_basis) into itself up to tolerance.
inline ComplexMatrix restricted_inverse(const ComplexMatrix& a, const ComplexMatrix& s_basis,
                                        const Tolerance& tol = Tolerance{}) {
  const std::size_t h = a.rows();
  if (a.cols() != h) fail(errc::dimension_mismatch, "restricted_inverse of non-square");
  const std::size_t d = s_basis.cols();
  if (d == 0) return ComplexMatrix::zero(h, h);
  // Left inverse of the basis via normal equations; canonical bases are well
  // conditioned at the scales this library targets.
  const ComplexMatrix sh = s_basis.conj_transpose();
  ComplexMatrix gram_inv;
  try {
    gram_inv = inverse(sh * s_basis, tol);
  } catch (const Error&) {
    throw Error(errc::singular_on_subspace, "subspace basis is rank deficient");
  }
  const ComplexMatrix pinv = gram_inv * sh;  // d x h
  const ComplexMatrix compressed = pinv * (a * s_basis);
  ComplexMatrix comp_inv;
  try {
    comp_inv = inverse(compressed, tol);
  } catch (const Error&) {
    throw Error(errc::singular_on_subspace, "compression is singular on the subspace");
  }
  return s_basis * comp_inv * pinv;
}

}  // namespace subalg
