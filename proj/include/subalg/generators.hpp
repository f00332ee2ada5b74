#pragma once

#include <cstdint>
#include <random>

#include "subalg/collections.hpp"

namespace subalg {

// Deterministic source for the randomized verification harness. Every
// randomized test and CLI check seeds one of these and reports the seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(eng_);
  }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive bounds
    std::uniform_int_distribution<std::size_t> d(lo, hi);
    return d(eng_);
  }
  cplx gauss() {
    std::normal_distribution<double> d(0.0, 1.0);
    return cplx(d(eng_), d(eng_));
  }
  // Nonzero point with modulus in [0.5, 1.5] and random phase: keeps both L
  // and the shifted brackets comfortably invertible for generic collections.
  cplx annulus() {
    const double r = uniform(0.5, 1.5);
    const double t = uniform(0.0, 6.283185307179586);
    return cplx(r * std::cos(t), r * std::sin(t));
  }
  MaterialAssignment annulus_point(std::size_t n) {
    std::vector<cplx> z(n);
    for (cplx& v : z) v = annulus();
    return MaterialAssignment(std::move(z));
  }
  ComplexMatrix matrix(std::size_t rows, std::size_t cols) {
    ComplexMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = gauss();
    return m;
  }
  ComplexMatrix nonsingular(std::size_t n, const Tolerance& tol = Tolerance{}) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      ComplexMatrix m = matrix(n, n);
      if (rank(m, tol) == n) return m;
    }
    fail(errc::invalid_argument, "could not draw a nonsingular matrix");
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// Splits `total` into `parts` nonnegative integers, each at least `minimum`.
inline std::vector<std::size_t> random_composition(Rng& rng, std::size_t total, std::size_t parts,
                                                   std::size_t minimum) {
  std::vector<std::size_t> out(parts, minimum);
  std::size_t rest = total - minimum * parts;
  for (std::size_t i = 0; i + 1 < parts && rest > 0; ++i) {
    const std::size_t take = rng.index(0, rest);
    out[i] += take;
    rest -= take;
  }
  if (parts > 0) out[parts - 1] += rest;
  return out;
}

struct ZGenOptions {
  std::size_t max_h = 10;
  std::size_t max_n = 4;
  std::size_t max_m = 3;
  bool scalar_u = false;  // force dim U = 1
};

inline ZCollection random_z_collection(Rng& rng, const ZGenOptions& opts = ZGenOptions{},
                                       const Tolerance& tol = Tolerance{}) {
  for (int attempt = 0; attempt < 256; ++attempt) {
    const std::size_t n = rng.index(1, opts.max_n);
    const std::size_t m = opts.scalar_u ? 1 : rng.index(1, opts.max_m);
    const std::size_t h = rng.index(std::max(m, n), opts.max_h);
    if (h < m || h < n) continue;
    const auto uej = random_composition(rng, h - m, 2, 0);
    const auto ph = random_composition(rng, h, n, 1);

    const ComplexMatrix g1 = rng.nonsingular(h, tol);
    const ComplexMatrix g2 = rng.nonsingular(h, tol);
    ZCollection c;
    c.h = h;
    c.u = g1.block(0, 0, h, m);
    c.e = Subspace::from_span(g1.block(0, m, h, uej[0]), tol);
    c.j = Subspace::from_span(g1.block(0, m + uej[0], h, uej[1]), tol);
    std::size_t off = 0;
    for (std::size_t i = 0; i < n; ++i) {
      c.phases.push_back(Subspace::from_span(g2.block(0, off, h, ph[i]), tol));
      off += ph[i];
    }
    if (c.e.dim() != uej[0] || c.j.dim() != uej[1]) continue;
    if (validate(c, tol).all_pass()) return c;
  }
  fail(errc::invalid_argument, "could not draw a valid Z collection");
}

struct YGenOptions {
  std::size_t max_k = 10;
  std::size_t max_n = 4;
  std::size_t max_m = 3;
  bool even_v = false;  // force dim V even (superfunction material)
};

inline YCollection random_y_collection(Rng& rng, const YGenOptions& opts = YGenOptions{},
                                       const Tolerance& tol = Tolerance{}) {
  for (int attempt = 0; attempt < 256; ++attempt) {
    const std::size_t n = rng.index(1, opts.max_n);
    std::size_t m = rng.index(1, opts.max_m);
    if (opts.even_v && m % 2 != 0) m = (m + 1 <= opts.max_m) ? m + 1 : m - 1;
    if (m == 0) continue;
    const std::size_t k = rng.index(std::max({m + n, m + 1, std::size_t(2)}), std::max(opts.max_k, m + n));
    const auto ej = random_composition(rng, k, 2, 1);
    const auto ph = random_composition(rng, k - m, n, 1);

    const ComplexMatrix g1 = rng.nonsingular(k, tol);
    const ComplexMatrix g2 = rng.nonsingular(k, tol);
    YCollection c;
    c.k = k;
    c.e = Subspace::from_span(g1.block(0, 0, k, ej[0]), tol);
    c.j = Subspace::from_span(g1.block(0, ej[0], k, ej[1]), tol);
    c.v = g2.block(0, 0, k, m);
    std::size_t off = m;
    for (std::size_t i = 0; i < n; ++i) {
      c.phases.push_back(Subspace::from_span(g2.block(0, off, k, ph[i]), tol));
      off += ph[i];
    }
    if (c.e.dim() != ej[0] || c.j.dim() != ej[1]) continue;
    if (validate(c, tol).all_pass()) return c;
  }
  fail(errc::invalid_argument, "could not draw a valid Y collection");
}

inline Superfunction random_superfunction(Rng& rng, std::size_t ports, std::size_t max_n = 3,
                                          std::size_t max_k = 10, const Tolerance& tol = Tolerance{}) {
  YGenOptions o;
  o.max_k = std::max(max_k, 2 * ports + 2);
  o.max_n = max_n;
  o.max_m = 2 * ports;
  for (int attempt = 0; attempt < 256; ++attempt) {
    YCollection c = random_y_collection(rng, o, tol);
    if (c.m() != 2 * ports) continue;
    Superfunction s = make_superfunction(c, c.v.block(0, 0, c.k, ports), c.v.block(0, ports, c.k, ports));
    if (validate(s, tol).all_pass()) return s;
  }
  fail(errc::invalid_argument, "could not draw a valid superfunction");
}

// Extends a collection with a decoupled block that pruning must discard: the
// extra directions decompose both ways on their own and never meet U.
inline ZCollection pad_z_collection(Rng& rng, const ZCollection& c, std::size_t extra,
                                    const Tolerance& tol = Tolerance{}) {
  if (extra == 0) return c;
  const std::size_t n = c.n();
  const std::size_t d = extra;
  const std::size_t h = c.h + d;
  const auto dej = random_composition(rng, d, 2, 0);
  const auto dph = random_composition(rng, d, n, 0);
  const ComplexMatrix g1 = rng.nonsingular(d, tol);
  const ComplexMatrix g2 = rng.nonsingular(d, tol);

  auto lift = [&](const ComplexMatrix& b, std::size_t row0) {
    ComplexMatrix out(h, b.cols());
    out.set_block(row0, 0, b);
    return out;
  };

  ZCollection p;
  p.h = h;
  p.u = lift(c.u, 0);
  p.e = Subspace::from_span(hcat(lift(c.e.basis(), 0), lift(g1.block(0, 0, d, dej[0]), c.h)), tol);
  p.j = Subspace::from_span(hcat(lift(c.j.basis(), 0), lift(g1.block(0, dej[0], d, dej[1]), c.h)), tol);
  std::size_t off = 0;
  for (std::size_t i = 0; i < n; ++i) {
    p.phases.push_back(Subspace::from_span(
        hcat(lift(c.phases[i].basis(), 0), lift(g2.block(0, off, d, dph[i]), c.h)), tol));
    off += dph[i];
  }
  return p;
}

}  // namespace subalg
