#pragma once

#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "subalg/algebra.hpp"
#include "subalg/canonical.hpp"
#include "subalg/generators.hpp"
#include "subalg/reduction.hpp"

namespace subalg {

// --- sparse multivariate polynomials -------------------------------------------

// Exponent-vector to coefficient map; zero coefficients are never stored.
class MultiPoly {
 public:
  using Exponents = std::vector<int>;

  explicit MultiPoly(std::size_t nvars = 0) : nvars_(nvars) {}

  static MultiPoly constant(std::size_t nvars, cplx value) {
    MultiPoly p(nvars);
    p.add_term(Exponents(nvars, 0), value);
    return p;
  }
  static MultiPoly monomial(std::size_t nvars, Exponents e, cplx coeff) {
    MultiPoly p(nvars);
    p.add_term(std::move(e), coeff);
    return p;
  }
  static MultiPoly variable(std::size_t nvars, std::size_t index) {
    Exponents e(nvars, 0);
    e.at(index) = 1;
    return monomial(nvars, std::move(e), cplx(1.0, 0.0));
  }

  std::size_t nvars() const { return nvars_; }
  bool is_zero() const { return terms_.empty(); }
  const std::map<Exponents, cplx>& terms() const { return terms_; }

  cplx coeff_or_zero(const Exponents& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? cplx(0.0, 0.0) : it->second;
  }

  void add_term(Exponents e, cplx coeff) {
    if (e.size() != nvars_) fail(errc::invalid_argument, "exponent vector length");
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      if (coeff != cplx(0.0, 0.0)) terms_.emplace(std::move(e), coeff);
      return;
    }
    it->second += coeff;
    if (it->second == cplx(0.0, 0.0)) terms_.erase(it);
  }

  int degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int x : e) s += x;
      d = std::max(d, s);
    }
    return d;
  }

  int degree_in(std::size_t var) const {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, e.at(var));
    return d;
  }

  bool is_homogeneous() const {
    if (terms_.empty()) return true;
    int d = -1;
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int x : e) s += x;
      if (d < 0) d = s;
      if (s != d) return false;
    }
    return true;
  }

  double max_coeff() const {
    double m = 0.0;
    for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  // Removes coefficients below eps_rel relative to the largest one; used to
  // sweep floating-point dust out of computed polynomials.
  MultiPoly cleaned(double eps_rel = 1e-12) const {
    const double cut = eps_rel * max_coeff();
    MultiPoly out(nvars_);
    for (const auto& [e, c] : terms_)
      if (std::abs(c) > cut) out.terms_.emplace(e, c);
    return out;
  }

  cplx eval(const std::vector<cplx>& z) const {
    if (z.size() != nvars_) fail(errc::dimension_mismatch, "evaluation point length");
    cplx total(0.0, 0.0);
    for (const auto& [e, c] : terms_) {
      cplx t = c;
      for (std::size_t v = 0; v < nvars_; ++v)
        for (int k = 0; k < e[v]; ++k) t *= z[v];
      total += t;
    }
    return total;
  }

  MultiPoly& operator+=(const MultiPoly& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  MultiPoly& operator-=(const MultiPoly& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
  friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a -= b; }
  friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
    MultiPoly r(a.nvars_);
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        Exponents e(a.nvars_);
        for (std::size_t v = 0; v < a.nvars_; ++v) e[v] = ea[v] + eb[v];
        r.add_term(std::move(e), ca * cb);
      }
    return r;
  }
  friend MultiPoly operator*(cplx s, MultiPoly a) {
    MultiPoly r(a.nvars_);
    for (const auto& [e, c] : a.terms_) r.add_term(e, s * c);
    return r;
  }

  // Each term is multiplied by the power of the given variable that lifts it
  // to the target total degree.
  MultiPoly homogenized(int target_degree, std::size_t var) const {
    MultiPoly r(nvars_);
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int x : e) s += x;
      if (s > target_degree) throw Error(errc::not_homogenizable, "term degree exceeds the target");
      Exponents lifted = e;
      lifted[var] += target_degree - s;
      r.add_term(std::move(lifted), c);
    }
    return r;
  }

 private:
  std::size_t nvars_;
  std::map<Exponents, cplx> terms_;
};

// A homogeneous rational function p/q with deg p = deg q + 1. Realization
// requires the normalized form p(1,...,1) = q(1,...,1) = 1.
struct MultiRational {
  MultiPoly p, q;

  std::size_t nvars() const { return p.nvars(); }

  bool is_normalized(double eps = 1e-9) const {
    const std::vector<cplx> ones(p.nvars(), cplx(1.0, 0.0));
    return std::abs(p.eval(ones) - cplx(1.0)) < eps && std::abs(q.eval(ones) - cplx(1.0)) < eps;
  }

  MultiRational normalized() const {
    const std::vector<cplx> ones(p.nvars(), cplx(1.0, 0.0));
    const cplx pv = p.eval(ones), qv = q.eval(ones);
    const double scale = std::max({p.max_coeff(), q.max_coeff(), 1.0});
    if (std::abs(pv) < 1e-12 * scale || std::abs(qv) < 1e-12 * scale)
      throw Error(errc::not_normalizable, "numerator or denominator vanishes at the all-ones point");
    MultiRational r;
    r.p = (cplx(1.0) / pv) * p;
    r.q = (cplx(1.0) / qv) * q;
    return r;
  }

  cplx eval(const std::vector<cplx>& z) const {
    const cplx qv = q.eval(z);
    const double scale = std::max(q.max_coeff(), 1e-300);
    if (std::abs(qv) < 1e-12 * scale) throw Error(errc::pole_hit, "denominator vanishes here");
    return p.eval(z) / qv;
  }
};

// --- rendering ------------------------------------------------------------------

namespace detail {

inline void render_number(std::ostream& os, double v) {
  std::ostringstream tmp;
  tmp.precision(15);
  tmp << v;
  os << tmp.str();
}

inline void render_coeff(std::ostream& os, cplx c, bool leading) {
  const bool has_im = std::abs(c.imag()) > 1e-14 * std::max(1.0, std::abs(c));
  if (!has_im) {
    double v = c.real();
    if (v < 0 && !leading) {
      os << " - ";
      v = -v;
    } else if (!leading) {
      os << " + ";
    } else if (v < 0) {
      os << "-";
      v = -v;
    }
    render_number(os, v);
    return;
  }
  if (!leading) os << " + ";
  os << "(";
  render_number(os, c.real());
  if (c.imag() >= 0) os << "+";
  render_number(os, c.imag());
  os << "i)";
}

}  // namespace detail

inline std::string render(const MultiPoly& p) {
  if (p.is_zero()) return "0";
  std::ostringstream os;
  bool leading = true;
  for (const auto& [e, c] : p.terms()) {
    detail::render_coeff(os, c, leading);
    leading = false;
    for (std::size_t v = 0; v < p.nvars(); ++v) {
      if (e[v] == 0) continue;
      os << "*z" << (v + 1);
      if (e[v] > 1) os << "^" << e[v];
    }
  }
  return os.str();
}

inline std::string render(const MultiRational& r) {
  return "(" + render(r.p) + ")/(" + render(r.q) + ")";
}

// --- parsing --------------------------------------------------------------------

namespace detail {

// Value carried while folding the expression tree: a polynomial or, once a
// division by a non-constant happened, a rational pair. Only one such division
// is allowed and nothing may be applied on top of it except the final read.
struct ParseValue {
  MultiPoly num;
  std::optional<MultiPoly> den;  // set once a non-constant division happened
};

class RationalParser {
 public:
  RationalParser(std::string_view text, std::size_t nvars) : text_(text), nvars_(nvars) {}

  ParseValue parse() {
    ParseValue v = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError(pos_, "unexpected trailing input");
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  bool accept(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  [[noreturn]] void expected(const std::string& what) {
    throw ParseError(pos_, "expected " + what);
  }
  static void require_poly(const ParseValue& v, std::size_t at, const char* op) {
    if (v.den)
      throw ParseError(at,
                       std::string("division by a non-constant is only allowed once, at the top "
                                   "level (violated by '") +
                           op + "')");
  }

  ParseValue parse_sum() {
    std::size_t at = pos_;
    ParseValue acc = parse_product();
    for (;;) {
      at = pos_;
      if (accept('+')) {
        ParseValue rhs = parse_product();
        require_poly(acc, at, "+");
        require_poly(rhs, at, "+");
        acc.num += rhs.num;
      } else if (accept('-')) {
        ParseValue rhs = parse_product();
        require_poly(acc, at, "-");
        require_poly(rhs, at, "-");
        acc.num -= rhs.num;
      } else {
        return acc;
      }
    }
  }

  ParseValue parse_product() {
    ParseValue acc = parse_factor();
    for (;;) {
      const std::size_t at = pos_;
      if (accept('*')) {
        ParseValue rhs = parse_factor();
        require_poly(acc, at, "*");
        require_poly(rhs, at, "*");
        acc.num = acc.num * rhs.num;
      } else if (accept('/')) {
        ParseValue rhs = parse_factor();
        require_poly(acc, at, "/");
        require_poly(rhs, at, "/");
        if (rhs.num.degree() == 0 || rhs.num.is_zero()) {
          const cplx c = rhs.num.eval(std::vector<cplx>(nvars_, cplx(1.0)));
          if (std::abs(c) < 1e-300) throw ParseError(at, "division by zero");
          acc.num = (cplx(1.0) / c) * acc.num;
        } else {
          acc.den = rhs.num;
        }
      } else {
        return acc;
      }
    }
  }

  ParseValue parse_factor() {
    if (accept('-')) {
      ParseValue v = parse_factor();
      require_poly(v, pos_, "unary -");
      v.num = cplx(-1.0) * v.num;
      return v;
    }
    if (accept('+')) return parse_factor();
    ParseValue v = parse_atom();
    const std::size_t at = pos_;
    if (accept('^')) {
      require_poly(v, at, "^");
      skip_ws();
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) expected("a nonnegative integer exponent");
      const int e = std::stoi(std::string(text_.substr(start, pos_ - start)));
      MultiPoly r = MultiPoly::constant(nvars_, cplx(1.0));
      for (int k = 0; k < e; ++k) r = r * v.num;
      v.num = std::move(r);
    }
    return v;
  }

  ParseValue parse_atom() {
    const char c = peek();
    if (c == '(') {
      ++pos_;
      ParseValue v = parse_sum();
      if (!accept(')')) expected("')'");
      return v;
    }
    if (c == 'z') {
      ++pos_;
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) expected("a variable index after 'z'");
      const long idx = std::stol(std::string(text_.substr(start, pos_ - start)));
      if (idx < 1 || static_cast<std::size_t>(idx) > nvars_)
        throw ParseError(start, "variable index out of range");
      return {MultiPoly::variable(nvars_, static_cast<std::size_t>(idx - 1)), std::nullopt};
    }
    if (c == 'i') {
      ++pos_;
      return {MultiPoly::constant(nvars_, cplx(0.0, 1.0)), std::nullopt};
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
        ++pos_;
      // scientific exponent
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        std::size_t save = pos_;
        ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
        if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        } else {
          pos_ = save;
        }
      }
      const double v = std::stod(std::string(text_.substr(start, pos_ - start)));
      if (pos_ < text_.size() && text_[pos_] == 'i') {
        ++pos_;
        return {MultiPoly::constant(nvars_, cplx(0.0, v)), std::nullopt};
      }
      return {MultiPoly::constant(nvars_, cplx(v, 0.0)), std::nullopt};
    }
    expected("a number, variable, 'i' or '('");
  }

  std::string_view text_;
  std::size_t nvars_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// Parses an expression over z1..zN into a normalized homogeneous rational
// function. Inhomogeneous input is lifted by powers of the last variable.
inline MultiRational parse_rational(std::string_view text, std::size_t nvars) {
  if (nvars == 0) fail(errc::invalid_argument, "need at least one variable");
  detail::RationalParser parser(text, nvars);
  detail::ParseValue v = parser.parse();
  MultiPoly p = v.num;
  MultiPoly q = v.den ? *v.den : MultiPoly::constant(nvars, cplx(1.0));
  if (p.is_zero()) throw Error(errc::not_normalizable, "numerator is identically zero");
  if (q.is_zero()) throw Error(errc::not_normalizable, "denominator is identically zero");
  const int k = std::max(p.degree(), q.degree() + 1);
  MultiRational r;
  r.p = p.homogenized(k, nvars - 1);
  r.q = q.homogenized(k - 1, nvars - 1);
  return r.normalized();
}

// --- polynomial determinants ------------------------------------------------------

// Laplace expansion with memoization over column subsets; fine for the small
// pencils produced by extraction.
inline MultiPoly poly_det(const std::vector<std::vector<MultiPoly>>& m, std::size_t nvars) {
  const std::size_t n = m.size();
  if (n == 0) return MultiPoly::constant(nvars, cplx(1.0));
  std::map<std::uint64_t, MultiPoly> memo;
  std::function<MultiPoly(std::uint64_t, std::size_t)> det = [&](std::uint64_t cols,
                                                                 std::size_t row) -> MultiPoly {
    if (row == n) return MultiPoly::constant(nvars, cplx(1.0));
    auto it = memo.find(cols);
    if (it != memo.end()) return it->second;
    MultiPoly acc(nvars);
    int sign = 1;
    for (std::size_t c = 0; c < n; ++c) {
      if (!(cols & (std::uint64_t(1) << c))) continue;
      if (!m[row][c].is_zero()) {
        MultiPoly sub = det(cols & ~(std::uint64_t(1) << c), row + 1);
        acc += (sign > 0 ? cplx(1.0) : cplx(-1.0)) * (m[row][c] * sub);
      }
      sign = -sign;
    }
    memo.emplace(cols, acc);
    return acc;
  };
  return det((std::uint64_t(1) << n) - 1, 0);
}

// --- numerator and denominator extraction ------------------------------------------

// For a pruned scalar-U collection, the numerator is the determinant of the
// pencil of phase compressions to U + E, and the denominator comes from the
// reciprocal pencil on U + J with exponents reflected at the phase
// dimensions. Both come out normalized to one at the all-ones point.
inline MultiRational extract_pq(const ZCollection& c, const Tolerance& tol = Tolerance{}) {
  if (c.m() != 1) throw Error(errc::u_not_scalar, "extraction needs a one-dimensional U");
  {
    auto [pruned, report] = prune_z(c, tol);
    if (pruned.h != c.h) throw Error(errc::not_pruned, "collection must be pruned first");
  }
  const std::size_t n = c.n();
  ZProjectors zp = projectors(c, tol);
  const std::size_t q1 = c.e.dim(), q2 = c.j.dim();

  auto pencil = [&](const ComplexMatrix& basis, const ComplexMatrix& proj) {
    // coordinates of proj * Lambda_i * basis columns in `basis`
    std::vector<ComplexMatrix> mats;
    for (std::size_t i = 0; i < n; ++i)
      mats.push_back(coords_in(basis, proj * (zp.lambdas[i] * basis), tol));
    return mats;
  };

  const ComplexMatrix ue = hcat(c.u, c.e.basis());
  const std::vector<ComplexMatrix> a = pencil(ue, zp.g0 + zp.g1);
  std::vector<std::vector<MultiPoly>> apoly(q1 + 1, std::vector<MultiPoly>(q1 + 1, MultiPoly(n)));
  for (std::size_t r = 0; r <= q1; ++r)
    for (std::size_t cc = 0; cc <= q1; ++cc)
      for (std::size_t i = 0; i < n; ++i)
        if (a[i](r, cc) != cplx(0.0, 0.0))
          apoly[r][cc].add_term(MultiPoly::Exponents([&] {
                                  MultiPoly::Exponents e(n, 0);
                                  e[i] = 1;
                                  return e;
                                }()),
                                a[i](r, cc));
  MultiPoly p = poly_det(apoly, n).cleaned();

  const ComplexMatrix uj = hcat(c.u, c.j.basis());
  const std::vector<ComplexMatrix> b = pencil(uj, zp.g0 + zp.g2);
  std::vector<std::vector<MultiPoly>> bpoly(q2 + 1, std::vector<MultiPoly>(q2 + 1, MultiPoly(n)));
  for (std::size_t r = 0; r <= q2; ++r)
    for (std::size_t cc = 0; cc <= q2; ++cc)
      for (std::size_t i = 0; i < n; ++i)
        if (b[i](r, cc) != cplx(0.0, 0.0))
          bpoly[r][cc].add_term(MultiPoly::Exponents([&] {
                                  MultiPoly::Exponents e(n, 0);
                                  e[i] = 1;
                                  return e;
                                }()),
                                b[i](r, cc));
  const MultiPoly bdet = poly_det(bpoly, n).cleaned();

  // reflect the reciprocal-variable exponents at the phase dimensions
  MultiPoly q(n);
  for (const auto& [e, coeff] : bdet.terms()) {
    MultiPoly::Exponents flipped(n);
    for (std::size_t i = 0; i < n; ++i) {
      flipped[i] = static_cast<int>(c.phases[i].dim()) - e[i];
      if (flipped[i] < 0) throw Error(errc::not_pruned, "phase exponent exceeds its dimension");
    }
    q.add_term(std::move(flipped), coeff);
  }
  q = q.cleaned();

  MultiRational r;
  r.p = std::move(p);
  r.q = std::move(q);
  return r;
}

// --- one-variable correspondence ----------------------------------------------------

struct OneVarParams {
  bool even = true;  // ambient dimension 2d (even) or 2d-1 (odd)
  std::vector<cplx> gammas;  // d-1 values
  std::vector<cplx> deltas;  // d values (even) or d-1 values (odd)

  std::size_t d() const { return even ? deltas.size() : deltas.size() + 1; }
};

// The chain-basis Z(2) collection determined by the closure parameters. The
// chain vectors alternate between the U/E side (odd labels, coordinates
// 0, 2, 4, ...) and the first phase (even labels, coordinates 1, 3, 5, ...);
// gammas fold the deepest chain vector back and deltas give the U component
// of each phase-one vector.
inline ZCollection one_var_collection(const OneVarParams& params, const Tolerance& tol = Tolerance{}) {
  const std::size_t d = params.d();
  if (d == 0 || params.gammas.size() + 1 != d)
    fail(errc::invalid_argument, "parameter lengths do not match");
  const std::size_t h = params.even ? 2 * d : 2 * d - 1;
  if (h < 2) fail(errc::invalid_argument, "chain too short");
  const std::size_t p1dim = params.even ? d : d - 1;  // chain vectors in phase one

  ComplexMatrix gamma0 = ComplexMatrix::zero(h, h);
  ComplexMatrix gamma1 = ComplexMatrix::zero(h, h);
  ComplexMatrix lambda1 = ComplexMatrix::zero(h, h);

  // gamma0: the U component of each chain vector
  gamma0(0, 0) = 1.0;
  for (std::size_t j = 1; j <= p1dim; ++j) gamma0(0, 2 * j - 1) = params.deltas[j - 1];

  // gamma1: phase-one vectors map up the chain into E, the deepest one folds
  // back (even parity); E vectors are fixed
  for (std::size_t j = 1; j <= p1dim; ++j) {
    const std::size_t col = 2 * j - 1;
    if (2 * j < h) {
      gamma1(2 * j, col) = 1.0;
    } else {
      for (std::size_t i = 1; i <= d - 1; ++i) gamma1(2 * i, col) = params.gammas[i - 1];
    }
  }
  for (std::size_t i = 1; i <= d - 1; ++i) gamma1(2 * i, 2 * i) = 1.0;

  // lambda1: U/E vectors map down the chain into phase one, the deepest one
  // folds back (odd parity); phase-one vectors are fixed
  for (std::size_t j = 0; 2 * j < h; ++j) {
    const std::size_t col = 2 * j;
    if (2 * j + 1 < h) {
      lambda1(2 * j + 1, col) = 1.0;
    } else {
      for (std::size_t i = 1; i <= d - 1; ++i) lambda1(2 * i - 1, col) = params.gammas[i - 1];
    }
  }
  for (std::size_t j = 1; j <= p1dim; ++j) lambda1(2 * j - 1, 2 * j - 1) = 1.0;

  ZCollection c;
  c.h = h;
  c.u = ComplexMatrix(h, 1);
  c.u(0, 0) = 1.0;
  ComplexMatrix ebasis(h, d - 1);
  for (std::size_t i = 1; i <= d - 1; ++i) ebasis(2 * i, i - 1) = 1.0;
  c.e = Subspace::from_span(ebasis, tol);
  ComplexMatrix jgen(h, p1dim);
  for (std::size_t j = 1; j <= p1dim; ++j) {
    ComplexMatrix v(h, 1);
    v(2 * j - 1, 0) = 1.0;
    jgen.set_block(0, j - 1, v - gamma0 * v - gamma1 * v);
  }
  c.j = Subspace::from_span(jgen, tol);
  ComplexMatrix p1(h, p1dim);
  for (std::size_t j = 1; j <= p1dim; ++j) p1(2 * j - 1, j - 1) = 1.0;
  c.phases.push_back(Subspace::from_span(p1, tol));
  ComplexMatrix p2gen(h, h - p1dim);
  std::size_t col = 0;
  for (std::size_t idx = 0; idx < h; idx += 2) {
    ComplexMatrix v(h, 1);
    v(idx, 0) = 1.0;
    p2gen.set_block(0, col++, v - lambda1 * v);
  }
  c.phases.push_back(Subspace::from_span(p2gen, tol));
  return c;
}

// Recovers the chain parameters from a two-variable rational function of the
// stated parity. The first step rewrites p/q around the unit point as
// 1 - sum(t_j w^{j+1}) / (1 - sum(s_j w^j)) in w = 1 - z1, the second runs
// the triangular recursion from the s and t coefficients.
inline OneVarParams recover_1var(const MultiRational& r, bool even, const Tolerance& = Tolerance{}) {
  if (r.nvars() != 2) throw Error(errc::degree_mismatch, "expected a two-variable function");
  // dehomogenize at z2 = 1
  auto slice = [&](const MultiPoly& poly) {
    std::vector<cplx> coeffs;
    for (const auto& [e, c] : poly.terms()) {
      const std::size_t k = static_cast<std::size_t>(e[0]);
      if (coeffs.size() <= k) coeffs.resize(k + 1, cplx(0.0));
      coeffs[k] += c;
    }
    while (!coeffs.empty() && std::abs(coeffs.back()) < 1e-12 * r.p.max_coeff()) coeffs.pop_back();
    return coeffs;
  };
  const std::vector<cplx> pc = slice(r.p);
  const std::vector<cplx> qc = slice(r.q);
  if (pc.empty() || qc.empty()) throw Error(errc::degree_mismatch, "degenerate function");
  const std::size_t degp = pc.size() - 1, degq = qc.size() - 1;

  std::size_t d;
  if (even) {
    d = std::max(degp, degq + 1);
    if (d < 1) throw Error(errc::degree_mismatch, "degrees too small for the even chain");
  } else {
    d = std::max(degp, degq) + 1;
    if (d < 2) throw Error(errc::degree_mismatch, "degrees too small for the odd chain");
  }

  // re-expand a coefficient list around z1 = 1 - w
  auto about_one = [&](const std::vector<cplx>& coeffs, std::size_t len) {
    std::vector<cplx> out(len, cplx(0.0));
    std::vector<cplx> pw{cplx(1.0)};  // (1 - w)^k coefficients
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      for (std::size_t j = 0; j < pw.size() && j < len; ++j) out[j] += coeffs[k] * pw[j];
      std::vector<cplx> next(pw.size() + 1, cplx(0.0));
      for (std::size_t j = 0; j < pw.size(); ++j) {
        next[j] += pw[j];
        next[j + 1] -= pw[j];
      }
      pw = std::move(next);
    }
    return out;
  };

  const std::vector<cplx> qw = about_one(qc, d + 1);
  std::vector<cplx> diff(std::max(pc.size(), qc.size()), cplx(0.0));
  for (std::size_t k = 0; k < qc.size(); ++k) diff[k] += qc[k];
  for (std::size_t k = 0; k < pc.size(); ++k) diff[k] -= pc[k];
  const std::vector<cplx> dw = about_one(diff, d + 1);

  const cplx q1v = qw[0];  // q at z1 = 1
  if (std::abs(q1v) < 1e-12 * std::max(1.0, r.q.max_coeff()))
    throw Error(errc::not_expressible, "denominator vanishes at the unit point");
  if (std::abs(dw[0]) > 1e-8 * std::max(1.0, r.p.max_coeff()))
    throw Error(errc::not_expressible, "function does not equal one at the unit point");

  std::vector<cplx> s(d, cplx(0.0));  // s[j], j = 1..d-1 used
  for (std::size_t j = 1; j <= d - 1 && j < qw.size(); ++j) s[j] = -qw[j] / q1v;

  OneVarParams out;
  out.even = even;
  out.gammas.resize(d - 1);
  for (std::size_t j = 1; j <= d - 1; ++j) out.gammas[d - 1 - j] = s[j];  // gamma_j = s_{d-j}

  if (even) {
    std::vector<cplx> t(d, cplx(0.0));  // t[j], j = 0..d-1
    for (std::size_t j = 0; j <= d - 1; ++j) t[j] = dw[j + 1] / q1v;
    out.deltas.assign(d, cplx(0.0));
    out.deltas[0] = t[0];
    for (std::size_t j = 1; j <= d - 1; ++j) {
      cplx acc = t[j];
      for (std::size_t i = 1; i <= j; ++i) acc += out.deltas[i - 1] * s[1 + j - i];
      out.deltas[j] = acc;
    }
  } else {
    std::vector<cplx> t(d, cplx(0.0));  // t[j], j = 1..d-1
    for (std::size_t j = 1; j <= d - 1; ++j) t[j] = dw[j] / q1v;
    out.deltas.assign(d - 1, cplx(0.0));
    if (d >= 2) out.deltas[0] = t[1];
    for (std::size_t j = 2; j <= d - 1; ++j) {
      cplx acc = t[j];
      for (std::size_t i = 1; i <= j - 1; ++i) acc += out.deltas[i - 1] * s[j - i];
      out.deltas[j - 1] = acc;
    }
  }
  return out;
}

// --- the explicit two-variable family with ambiguous parameters ----------------------

struct NonUniquenessDemo {
  MultiRational zfun;     // the three-variable homogeneous function
  cplx root_a, root_b;    // the two admissible second-phase couplings
  bool degenerate = false;
};

// The five-dimensional chain family: the function determines delta1, delta2
// and the two symmetric combinations of (gamma2, gamma3) only, leaving a
// quadratic with two roots that realize the same function.
inline NonUniquenessDemo nonuniqueness_demo(cplx gamma2, cplx gamma3, cplx delta1, cplx delta2) {
  if (std::abs(delta2) < 1e-12) fail(errc::invalid_argument, "delta2 must be nonzero");
  if (std::abs(delta1) < 1e-12) fail(errc::invalid_argument, "delta1 must be nonzero");
  const cplx t1 = gamma2 * gamma3;
  const cplx t2 = gamma3 * delta1 + gamma2 * delta2;

  // homogeneous form with w_i = z_i - z_3
  const std::size_t n = 3;
  MultiPoly w1(n), w2(n), z3(n);
  w1.add_term({1, 0, 0}, cplx(1.0));
  w1.add_term({0, 0, 1}, cplx(-1.0));
  w2.add_term({0, 1, 0}, cplx(1.0));
  w2.add_term({0, 0, 1}, cplx(-1.0));
  z3.add_term({0, 0, 1}, cplx(1.0));

  MultiRational r;
  r.q = z3 * z3 - t1 * (w1 * w2);
  r.p = z3 * (r.q + delta1 * (w1 * z3) + delta2 * (w2 * z3) - t2 * (w1 * w2));

  NonUniquenessDemo demo;
  demo.zfun = std::move(r);
  const cplx disc = t2 * t2 - cplx(4.0) * t1 * delta1 * delta2;
  const cplx root = std::sqrt(disc);
  demo.root_a = (t2 + root) / (cplx(2.0) * delta2);
  demo.root_b = (t2 - root) / (cplx(2.0) * delta2);
  const double scale = std::max({std::abs(t2) * std::abs(t2), std::abs(t1 * delta1 * delta2), 1e-30});
  demo.degenerate = std::abs(disc) < 1e-10 * scale;
  return demo;
}

// Evaluates the family function directly from its parameters (the oracle the
// non-uniqueness tests compare both roots against).
inline cplx nonuniqueness_eval(cplx gamma2, cplx gamma3, cplx delta1, cplx delta2, cplx z1, cplx z2,
                               cplx z3) {
  const cplx w1 = z1 - z3, w2 = z2 - z3;
  const cplx t1 = gamma2 * gamma3;
  const cplx t2 = gamma3 * delta1 + gamma2 * delta2;
  const cplx den = z3 * z3 - t1 * w1 * w2;
  return z3 + z3 * (delta1 * w1 * z3 + delta2 * w2 * z3 - t2 * w1 * w2) / den;
}

// --- coefficient counting --------------------------------------------------------------

// Independent coefficient counts of the numerator and denominator families
// compatible with the given pruned dimensions. The lattice size is k + 1;
// the normalization removes one coefficient from each.
inline std::pair<long, long> coefficient_count(long p1, long p2, long p3, long q1, long q2) {
  const long h = p1 + p2 + p3;
  if (1 + q1 + q2 != h || p1 < 0 || p2 < 0 || p3 < 0 || q1 < 0 || q2 < 0)
    throw Error(errc::dimension_constraint_violated, "dimensions are inconsistent");
  for (long p : {p1, p2, p3})
    if (p > 1 + q1 || p > 1 + q2)
      throw Error(errc::dimension_constraint_violated, "a phase exceeds the exponent caps");
  const long sumsq = p1 * p1 + p2 * p2 + p3 * p3;
  const long k1x2 = 2 * (1 + q1) * q2 - sumsq + h;
  const long k2x2 = 2 * (1 + q2) * q1 - sumsq + h;
  if (k1x2 % 2 != 0 || k2x2 % 2 != 0)
    throw Error(errc::dimension_constraint_violated, "count formula is not integral");
  return {k1x2 / 2, k2x2 / 2};
}

// --- realization ------------------------------------------------------------------------

struct RealizationSample {
  std::vector<cplx> z;
  double residual = 0.0;
};

struct RealizationCertificate {
  ZCollection collection;
  MultiRational target;
  std::vector<RealizationSample> samples;
  double max_residual = 0.0;
};

struct YRealizationCertificate {
  YCollection collection;
  std::vector<RealizationSample> samples;
  double max_residual = 0.0;
};

namespace detail {

// A collection together with the target variable each phase position binds.
struct TaggedZ {
  ZCollection c;
  std::vector<std::size_t> var_of;
};

inline MaterialAssignment spread(const std::vector<std::size_t>& var_of,
                                 const std::vector<cplx>& z) {
  std::vector<cplx> out(var_of.size());
  for (std::size_t p = 0; p < var_of.size(); ++p) out[p] = z.at(var_of[p]);
  return MaterialAssignment(out);
}

// Regroups phases so position v binds variable v, inserting empty phases for
// unused variables.
inline ZCollection standardize(const TaggedZ& t, std::size_t nvars, const Tolerance& tol) {
  ZCollection out = t.c;
  out.phases.clear();
  for (std::size_t v = 0; v < nvars; ++v) {
    ComplexMatrix gen(t.c.h, 0);
    for (std::size_t p = 0; p < t.var_of.size(); ++p)
      if (t.var_of[p] == v && t.c.phases[p].dim() > 0) gen = hcat(gen, t.c.phases[p].basis());
    out.phases.push_back(Subspace::from_span(gen, tol));
  }
  return out;
}

inline TaggedZ subst_tagged(const TaggedZ& host, std::size_t slot, const TaggedZ& plug,
                            const Tolerance& tol) {
  TaggedZ out;
  out.c = substitute_into_z(host.c, plug.c, slot, tol);
  out.var_of.assign(host.var_of.begin(), host.var_of.begin() + slot);
  out.var_of.insert(out.var_of.end(), plug.var_of.begin(), plug.var_of.end());
  out.var_of.insert(out.var_of.end(), host.var_of.begin() + slot + 1, host.var_of.end());
  return out;
}

inline TaggedZ prune_tagged(const TaggedZ& t, const Tolerance& tol) {
  TaggedZ out;
  out.c = prune_z(t.c, tol).first;
  out.var_of = t.var_of;
  return out;
}

// Z = z_var on a one-dimensional ambient.
inline TaggedZ variable_atom(std::size_t var) {
  TaggedZ t;
  t.c.h = 1;
  t.c.u = ComplexMatrix::identity(1);
  t.c.e = Subspace::zero(1);
  t.c.j = Subspace::zero(1);
  t.c.phases.push_back(Subspace::full(1));
  t.var_of = {var};
  return t;
}

// The two-position product host: value z_a z_b / z_hom.
inline TaggedZ product_host(const Tolerance& tol) {
  // 9 (2x/3 + y/3)^2 / 8 - (2x - y)^2 / 8 = x y, lifted by the homogenizer
  TaggedZ sq1{scalar_square_collection(tol), {0, 2}};
  TaggedZ sq2{scalar_square_collection(tol), {0, 2}};
  TaggedZ aff23{weighted_average_collection(cplx(2.0 / 3.0), tol), {0, 1}};
  TaggedZ aff2{weighted_average_collection(cplx(2.0), tol), {0, 1}};
  TaggedZ outer{weighted_average_collection(cplx(9.0 / 8.0), tol), {0, 1}};

  TaggedZ left = subst_tagged(sq1, 0, aff23, tol);    // ((2x+y)/3)^2 / z
  TaggedZ right = subst_tagged(sq2, 0, aff2, tol);    // (2x-y)^2 / z
  TaggedZ prod = subst_tagged(outer, 0, left, tol);   // positions: x y z | pos(outer 1)
  prod = subst_tagged(prod, 3, right, tol);           // positions: x y z x y z
  prod.var_of = {0, 1, 2, 0, 1, 2};
  TaggedZ out;
  out.c = standardize(prod, 3, tol);
  out.var_of = {0, 1, 2};
  return prune_tagged(out, tol);
}

// The division host: value z_b z_hom / z_a.
inline TaggedZ ratio_host(const Tolerance& tol) {
  // swapped phases of the square make pos1^2 / pos0
  TaggedZ inv{scalar_square_collection(tol), {0, 1}};
  std::swap(inv.c.phases[0], inv.c.phases[1]);
  inv.var_of = {0, 2};  // z3^2 / z1

  TaggedZ prod = product_host(tol);  // z_a z_b / z_c
  TaggedZ out = subst_tagged(prod, 0, inv, tol);  // (z3^2/z1) z_b / z_c
  out.var_of = {0, 2, 1, 2};
  TaggedZ std_out;
  std_out.c = standardize(out, 3, tol);
  std_out.var_of = {0, 1, 2};
  return prune_tagged(std_out, tol);
}

class ScalarRealizer {
 public:
  ScalarRealizer(std::size_t nvars, const Tolerance& tol) : nvars_(nvars), tol_(tol) {}

  TaggedZ monomial(const MultiPoly::Exponents& exps) {
    auto it = monomial_cache_.find(exps);
    if (it != monomial_cache_.end()) return it->second;
    std::vector<std::size_t> factors;
    for (std::size_t v = 0; v < exps.size(); ++v)
      for (int k = 0; k < exps[v]; ++k) factors.push_back(v);
    if (factors.empty()) fail(errc::invalid_argument, "constant monomial has no factors");

    TaggedZ acc = variable_atom(factors[0]);
    for (std::size_t f = 1; f < factors.size(); ++f) {
      const TaggedZ& prod = product();
      TaggedZ step = subst_tagged(prod, 0, acc, tol_);
      // remaining product positions: the new factor and the homogenizer
      step.var_of[step.var_of.size() - 2] = factors[f];
      step.var_of[step.var_of.size() - 1] = nvars_ - 1;
      TaggedZ merged;
      merged.c = standardize(step, nvars_, tol_);
      merged.var_of = all_vars();
      acc = prune_tagged(merged, tol_);
    }
    TaggedZ result;
    result.c = standardize(acc, nvars_, tol_);
    result.var_of = all_vars();
    result = prune_tagged(result, tol_);
    monomial_cache_.emplace(exps, result);
    return result;
  }

  // Homogeneous polynomial with coefficients summing to one, realized as a
  // chain of two-point affine combinations of monomials.
  TaggedZ polynomial(const MultiPoly& f) {
    std::vector<std::pair<MultiPoly::Exponents, cplx>> terms(f.terms().begin(), f.terms().end());
    return polynomial_rec(terms, 0, cplx(1.0));
  }

  const TaggedZ& product() {
    if (!product_) product_ = product_host(tol_);
    return *product_;
  }
  const TaggedZ& ratio() {
    if (!ratio_) ratio_ = ratio_host(tol_);
    return *ratio_;
  }

  std::vector<std::size_t> all_vars() const {
    std::vector<std::size_t> v(nvars_);
    for (std::size_t i = 0; i < nvars_; ++i) v[i] = i;
    return v;
  }

 private:
  TaggedZ polynomial_rec(std::vector<std::pair<MultiPoly::Exponents, cplx>>& terms,
                         std::size_t from, cplx scale) {
    const std::size_t count = terms.size() - from;
    if (count == 0) fail(errc::realization_failed, "empty polynomial");
    if (count == 1) return monomial(terms[from].first);
    // pick a leading term whose weight is not one
    std::size_t pick = from;
    for (std::size_t i = from; i < terms.size(); ++i) {
      if (std::abs(terms[i].second / scale - cplx(1.0)) > 0.25) {
        pick = i;
        break;
      }
    }
    std::swap(terms[from], terms[pick]);
    const cplx weight = terms[from].second / scale;
    TaggedZ head = monomial(terms[from].first);
    TaggedZ tail = polynomial_rec(terms, from + 1, scale * (cplx(1.0) - weight));

    TaggedZ aff{weighted_average_collection(weight, tol_), {0, 1}};
    TaggedZ join = subst_tagged(aff, 1, tail, tol_);
    join = subst_tagged(join, 0, head, tol_);
    TaggedZ merged;
    merged.c = standardize(join, nvars_, tol_);
    merged.var_of = all_vars();
    return prune_tagged(merged, tol_);
  }

  std::size_t nvars_;
  Tolerance tol_;
  std::map<MultiPoly::Exponents, TaggedZ> monomial_cache_;
  std::optional<TaggedZ> product_;
  std::optional<TaggedZ> ratio_;
};

inline std::vector<std::vector<cplx>> certificate_points(std::size_t nvars, std::size_t count,
                                                         const MultiRational& target,
                                                         std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<cplx>> pts;
  while (pts.size() < count) {
    std::vector<cplx> z(nvars);
    for (cplx& v : z) v = rng.annulus();
    try {
      (void)target.eval(z);
    } catch (const Error&) {
      continue;  // too close to a pole
    }
    pts.push_back(std::move(z));
  }
  return pts;
}

}  // namespace detail

// Compiles a normalized homogeneous rational function into a scalar-U
// collection: monomials from iterated products, polynomials from affine
// chains, and the quotient from the division host. The result is pruned and
// shipped with sample-point evidence.
inline RealizationCertificate realize_scalar(const MultiRational& target,
                                             const Tolerance& tol = Tolerance{},
                                             std::uint64_t seed = 0) {
  if (!target.is_normalized())
    throw Error(errc::not_normalizable, "realization target must be normalized");
  if (!target.p.is_homogeneous() || !target.q.is_homogeneous())
    throw Error(errc::invalid_argument, "realization target must be homogeneous");
  const std::size_t n = target.nvars();
  const int k = target.p.degree();
  if (target.q.degree() != k - 1)
    throw Error(errc::invalid_argument, "numerator degree must exceed the denominator by one");

  detail::ScalarRealizer realizer(n, tol);
  detail::TaggedZ result;
  if (target.q.degree() == 0) {
    result = realizer.polynomial(target.p);
  } else {
    detail::TaggedZ pnum = realizer.polynomial(target.p);
    detail::TaggedZ pden = realizer.polynomial(target.q);
    detail::TaggedZ ratio = realizer.ratio();  // z_b z_hom / z_a
    detail::TaggedZ join = subst_tagged(ratio, 0, pden, tol);
    join = subst_tagged(join, n, pnum, tol);  // the z_b position after the first splice
    // remaining position: the homogenizer
    join.var_of[join.var_of.size() - 1] = n - 1;
    detail::TaggedZ merged;
    merged.c = detail::standardize(join, n, tol);
    merged.var_of = realizer.all_vars();
    result = detail::prune_tagged(merged, tol);
  }

  RealizationCertificate cert;
  cert.collection = result.c;
  cert.target = target;
  for (const auto& z : detail::certificate_points(n, 25, target, seed ^ 0x9e3779b97f4a7c15ull)) {
    const cplx got = solve_z(cert.collection, MaterialAssignment(z), SolveOptions{}, tol).value(0, 0);
    const cplx want = target.eval(z);
    RealizationSample s;
    s.z = z;
    s.residual = std::abs(got - want);
    cert.max_residual = std::max(cert.max_residual, s.residual);
    cert.samples.push_back(std::move(s));
  }
  if (cert.max_residual >= 1e-7)
    throw Error(errc::realization_failed,
                "certificate residual " + std::to_string(cert.max_residual));
  return cert;
}

namespace detail {

// One-entry Y atoms: a 2x2 V with a single nonzero response entry of weight
// b in the material constant. Diagonal weights of -1 are split by the caller.
inline YCollection y_entry_atom(bool diagonal, cplx b, const Tolerance& tol) {
  YBlockParams p{};
  if (diagonal) {
    const cplx t(1.0, 0.0);
    p.e13 = 1.0;
    p.e14 = 1.0;
    p.j31 = -b - t;
    p.j41 = t;
    p.e23 = t;
    p.e24 = b + t;
  } else {
    p.e13 = 1.0;
    p.e24 = 1.0;
    p.j41 = -b;
  }
  return y_block_collection(p, tol);
}

// Merges the second copy of the variable list onto the first after an
// addition of two n-variable collections.
inline YCollection merge_variable_pairs(const YCollection& c, std::size_t n, const Tolerance& tol) {
  YCollection out = c;
  std::vector<Subspace> merged;
  for (std::size_t v = 0; v < n; ++v)
    merged.push_back(Subspace::from_span(
        hcat(c.phases[v].basis(), c.phases[n + v].basis()), tol));
  out.phases = std::move(merged);
  return out;
}

}  // namespace detail

// Builds a Y collection realizing the given matrix of rational entries
// (std::nullopt meaning a zero entry) by summing embedded one-entry atoms.
inline YRealizationCertificate realize_y_matrix(
    const std::vector<std::vector<std::optional<MultiRational>>>& entries, std::size_t nvars,
    const Tolerance& tol = Tolerance{}, std::uint64_t seed = 0) {
  const std::size_t m = entries.size();
  if (m == 0) throw Error(errc::invalid_argument, "empty target matrix");
  for (const auto& row : entries)
    if (row.size() != m) throw Error(errc::invalid_argument, "target matrix must be square");

  const std::vector<cplx> ones(nvars, cplx(1.0));
  std::optional<YCollection> acc;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!entries[i][j]) continue;
      const MultiRational& entry = *entries[i][j];
      if (entry.nvars() != nvars)
        throw Error(errc::invalid_argument, "entry variable count mismatch");
      cplx b;
      MultiRational unit;
      try {
        b = entry.p.eval(ones) / entry.q.eval(ones);
        unit = entry.normalized();
      } catch (const Error&) {
        throw Error(errc::realization_failed, "entry not normalizable at the all-ones point");
      }

      // A unit-material response with eigenvalue -1 cannot come out of a
      // collection whose E and J are independent; the affected diagonal
      // atoms (and the sums leading to them) degenerate below.
      const RealizationCertificate scalar = realize_scalar(unit, tol, seed);
      try {
        YCollection placed;
        if (m == 1) {
          const YCollection atom = y_scalar_collection({b}, tol);
          placed = substitute_into_y(atom, scalar.collection, 0, tol);
        } else {
          const YCollection atom = detail::y_entry_atom(i == j, b, tol);
          const YCollection filled = substitute_into_y(atom, scalar.collection, 0, tol);
          std::vector<std::size_t> positions(2);
          positions[0] = i;
          positions[1] = (i == j) ? (i + 1) % m : j;
          placed = embed_at(filled, m, positions, tol);
        }
        placed = prune_y(placed, tol).first;
        if (!acc) {
          acc = placed;
        } else {
          const ComplexMatrix id = ComplexMatrix::identity(m);
          YCollection sum = add_y(*acc, placed, id, id, tol);
          acc = detail::merge_variable_pairs(sum, nvars, tol);
          acc = prune_y(*acc, tol).first;
        }
      } catch (const Error& e) {
        throw Error(errc::realization_failed,
                    "entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                        ") could not be assembled: " + e.what());
      }
    }
  }
  if (!acc) acc = additive_zero_y(m, nvars);

  YRealizationCertificate cert;
  cert.collection = *acc;
  for (Rng rng(seed ^ 0x517cc1b727220a95ull); cert.samples.size() < 25;) {
    std::vector<cplx> z(nvars);
    for (cplx& v : z) v = rng.annulus();
    ComplexMatrix want(m, m);
    bool pole = false;
    for (std::size_t i = 0; i < m && !pole; ++i)
      for (std::size_t j = 0; j < m && !pole; ++j) {
        if (!entries[i][j]) continue;
        try {
          want(i, j) = entries[i][j]->eval(z);
        } catch (const Error&) {
          pole = true;
        }
      }
    if (pole) continue;
    const ComplexMatrix got = solve_y(cert.collection, MaterialAssignment(z), SolveOptions{}, tol).value;
    RealizationSample s;
    s.z = z;
    s.residual = (got - want).max_abs();
    cert.max_residual = std::max(cert.max_residual, s.residual);
    cert.samples.push_back(std::move(s));
  }
  if (cert.max_residual >= 1e-6)
    throw Error(errc::realization_failed,
                "certificate residual " + std::to_string(cert.max_residual));
  return cert;
}

}  // namespace subalg
