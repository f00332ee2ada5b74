#include "subalg/reduction.hpp"

#include "subalg/canonical.hpp"
#include "support.hpp"

using namespace subalg;
using testsupport::approx_eq;

namespace {

void check_pruned_z_inequalities(const ZCollection& c) {
  const std::size_t m = c.m(), q1 = c.e.dim(), q2 = c.j.dim(), n = c.n();
  std::size_t total = m + q1 + q2;
  CHECK(total == c.h);
  for (const Subspace& p : c.phases) {
    CHECK(p.dim() <= m + q1);
    CHECK(p.dim() <= m + q2);
  }
  CHECK(q2 <= (n - 1) * (m + q1));
  CHECK(q1 <= (n - 1) * (m + q2));
  if (n == 2) {
    CHECK((q1 > q2 ? q1 - q2 : q2 - q1) <= m);
    for (const Subspace& p : c.phases) CHECK(p.dim() + std::min(q1, q2) + m >= c.h);
  }
}

void check_pruned_y_inequalities(const YCollection& c) {
  const std::size_t v = c.m(), q1 = c.e.dim(), q2 = c.j.dim(), n = c.n();
  CHECK(q1 + q2 == c.k);
  for (const Subspace& p : c.phases) {
    CHECK(p.dim() <= q1);
    CHECK(p.dim() <= q2);
  }
  CHECK(q2 <= v + (n - 1) * q1);
  CHECK(q1 <= v + (n - 1) * q2);
  if (n == 2) {
    CHECK((q1 > q2 ? q1 - q2 : q2 - q1) <= v);
    // p_j >= max(q1, q2) - v
    for (const Subspace& p : c.phases) CHECK(p.dim() + v >= std::max(q1, q2));
  }
}

}  // namespace

TEST_CASE("pruning Z collections") {
  Rng rng(20240070);

  SECTION("padded blocks are removed and the function is preserved") {
    for (int trial = 0; trial < 20; ++trial) {
      const ZCollection c = random_z_collection(rng);
      const std::size_t extra = rng.index(1, 4);
      const ZCollection padded = pad_z_collection(rng, c, extra);
      REQUIRE(validate(padded).all_pass());
      auto [pruned, report] = prune_z(padded);
      CHECK(pruned.h <= c.h);
      CHECK(report.old_dims[0] == c.h + extra);
      const MaterialAssignment z = rng.annulus_point(c.n());
      const ComplexMatrix before = solve_z(padded, z).value;
      const ComplexMatrix after = solve_z(pruned, z).value;
      CHECK(approx_eq(after, before, 1e-8 * std::max(1.0, before.max_abs())));
      check_pruned_z_inequalities(pruned);
    }
  }

  SECTION("pruning is a fixed point") {
    const ZCollection c = random_z_collection(rng);
    auto [p1, r1] = prune_z(c);
    auto [p2, r2] = prune_z(p1);
    CHECK(p2.h == p1.h);
    CHECK(p2.e.dim() == p1.e.dim());
    CHECK(p2.j.dim() == p1.j.dim());
    CHECK(approx_eq(p2.u, p1.u, 1e-9));
  }
}

TEST_CASE("pruning Y collections") {
  Rng rng(20240071);
  for (int trial = 0; trial < 20; ++trial) {
    const YCollection c = random_y_collection(rng);
    auto [pruned, report] = prune_y(c);
    CHECK(pruned.k <= c.k);
    const MaterialAssignment z = rng.annulus_point(c.n());
    const ComplexMatrix before = solve_y(c, z).value;
    const ComplexMatrix after = solve_y(pruned, z).value;
    CHECK(approx_eq(after, before, 1e-8 * std::max(1.0, before.max_abs())));
    check_pruned_y_inequalities(pruned);

    auto [again, r2] = prune_y(pruned);
    CHECK(again.k == pruned.k);
  }
}

TEST_CASE("normalization") {
  Rng rng(20240072);

  SECTION("extension followed by normalization recovers the function") {
    for (int trial = 0; trial < 15; ++trial) {
      ZGenOptions o;
      o.max_m = 2;
      const ZCollection zc = random_z_collection(rng, o);
      const ComplexMatrix t = rng.nonsingular(zc.m());
      const YCollection yc = extension(zc, t);
      NormalizationResult norm;
      try {
        norm = normalize_y(yc);
      } catch (const Error& e) {
        REQUIRE(e.code() == errc::assumption_violated);
        continue;
      }
      // function law at sample points
      for (int pt = 0; pt < 20; ++pt) {
        const MaterialAssignment z = rng.annulus_point(zc.n());
        const ComplexMatrix y = solve_y(yc, z).value;
        const ComplexMatrix zres = solve_z(norm.z, z).value;
        const ComplexMatrix want = norm.m_map * zres * norm.k_map;
        CHECK(approx_eq(y, want, 1e-8 * std::max(1.0, want.max_abs())));
      }
      // unit material: Y(1) = M K
      const ComplexMatrix y1 = solve_y(yc, MaterialAssignment::ones(yc.n())).value;
      CHECK(approx_eq(y1, norm.m_map * norm.k_map, 1e-9 * std::max(1.0, y1.max_abs())));
      // adapted basis: K becomes the identity and Y(z) = Y(1) Zhat(z)
      ZCollection adapted = norm.z;
      adapted.u = adapted.u * norm.k_map;
      const MaterialAssignment z = rng.annulus_point(zc.n());
      const ComplexMatrix zhat = solve_z(adapted, z).value;
      const ComplexMatrix y = solve_y(yc, z).value;
      CHECK(approx_eq(y, y1 * zhat, 1e-8 * std::max(1.0, y.max_abs())));
    }
  }

  SECTION("a collection with V inside J violates the assumptions") {
    YCollection c;
    c.k = 2;
    c.v = ComplexMatrix(2, 1, {1, 0});
    c.e = Subspace::from_span(ComplexMatrix(2, 1, {0, 1}));
    c.j = Subspace::from_span(ComplexMatrix(2, 1, {1, 0}));
    c.phases.push_back(Subspace::from_span(ComplexMatrix(2, 1, {0, 1})));
    CHECK_THROWS_MATCHES(normalize_y(c), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == errc::assumption_violated;
                         }));
  }
}

TEST_CASE("reduction") {
  Rng rng(20240073);

  SECTION("a single-phase collection reduces to an empty correction space") {
    ZGenOptions o;
    o.max_n = 1;
    const ZCollection c = random_z_collection(rng, o);
    REQUIRE(c.n() == 1);
    const auto w = phase_compressions(c);
    CHECK(w.empty());
    const MaterialAssignment z = rng.annulus_point(1);
    const ComplexMatrix got = reduction_z_formula(w, c.m(), 1, ComplexMatrix(), z);
    CHECK(approx_eq(got, z.z[0] * ComplexMatrix::identity(c.m()), 1e-12));
    CHECK(approx_eq(solve_z(c, z).value, got, 1e-9));
  }

  SECTION("the recursion formula reproduces the solve") {
    int done = 0;
    while (done < 15) {
      ZGenOptions o;
      o.max_m = 2;
      o.max_n = 3;
      ZCollection c = random_z_collection(rng, o);
      if (c.n() < 2) continue;
      c = prune_z(c).first;
      if (c.e.dim() == 0) continue;
      ReductionResult red;
      try {
        red = reduce_z(c);
      } catch (const Error& e) {
        REQUIRE(e.code() == errc::assumption_violated);
        continue;
      }
      CHECK(red.y.m() == c.m() * (c.n() - 1));
      for (int pt = 0; pt < 20; ++pt) {
        const MaterialAssignment z = rng.annulus_point(c.n());
        ComplexMatrix y;
        try {
          y = solve_y(red.y, z).value;
        } catch (const Error&) {
          continue;
        }
        const ComplexMatrix got = reduction_z_formula(red.w, c.m(), c.n(), y, z);
        const ComplexMatrix want = solve_z(c, z).value;
        CHECK(approx_eq(got, want, 1e-8 * std::max(1.0, want.max_abs())));
      }
      ++done;
    }
  }

  SECTION("the compressions match finite differences of Z at the unit point") {
    int done = 0;
    while (done < 10) {
      ZGenOptions o;
      o.max_m = 2;
      o.max_n = 3;
      ZCollection c = random_z_collection(rng, o);
      if (c.n() < 2) continue;
      const auto w = phase_compressions(c);
      const double step = 1e-5;
      for (std::size_t i = 0; i + 1 < c.n(); ++i) {
        std::vector<cplx> zp(c.n(), cplx(1.0)), zm(c.n(), cplx(1.0));
        zp[i] += step;
        zm[i] -= step;
        const ComplexMatrix fd = (cplx(1.0) / cplx(2.0 * step)) *
                                 (solve_z(c, MaterialAssignment(zp)).value -
                                  solve_z(c, MaterialAssignment(zm)).value);
        CHECK(approx_eq(fd, w[i], 1e-6 * std::max(1.0, w[i].max_abs())));
      }
      ++done;
    }
  }
}

TEST_CASE("continued fraction expansion") {
  Rng rng(20240074);

  SECTION("single-variable collections terminate at depth one") {
    ZGenOptions o;
    o.max_n = 1;
    const ZCollection c = random_z_collection(rng, o);
    const CFExpansion exp = continued_fraction(c, 8);
    CHECK(exp.stop == CFStop::zero_dimension);
    CHECK(exp.levels.size() == 1);
    const MaterialAssignment z = rng.annulus_point(1);
    CHECK(approx_eq(cf_evaluate(exp, z), solve_z(c, z).value, 1e-9));
  }

  SECTION("scalar two-phase collections expand fully") {
    int full = 0;
    for (int trial = 0; trial < 30 && full < 8; ++trial) {
      ZGenOptions o;
      o.scalar_u = true;
      o.max_n = 2;
      o.max_h = 8;
      ZCollection c = random_z_collection(rng, o);
      if (c.n() != 2) continue;
      c = prune_z(c).first;
      const CFExpansion exp = continued_fraction(c, 16);
      if (exp.stop != CFStop::zero_dimension) continue;
      ++full;
      for (int pt = 0; pt < 20; ++pt) {
        const MaterialAssignment z = rng.annulus_point(2);
        const ComplexMatrix want = solve_z(c, z).value;
        CHECK(approx_eq(cf_evaluate(exp, z), want, 1e-7 * std::max(1.0, want.max_abs())));
      }
    }
    CHECK(full >= 8);
  }

  SECTION("partial expansions reconstruct exactly through the terminal solve") {
    int done = 0;
    for (int trial = 0; trial < 40 && done < 6; ++trial) {
      ZGenOptions o;
      o.max_m = 2;
      o.max_n = 3;
      ZCollection c = random_z_collection(rng, o);
      c = prune_z(c).first;
      if (c.n() < 2 || c.e.dim() == 0) continue;
      const CFExpansion exp = continued_fraction(c, 2);
      const MaterialAssignment z = rng.annulus_point(c.n());
      ComplexMatrix got;
      try {
        got = cf_evaluate(exp, z);
      } catch (const Error&) {
        continue;
      }
      const ComplexMatrix want = solve_z(c, z).value;
      CHECK(approx_eq(got, want, 1e-7 * std::max(1.0, want.max_abs())));
      ++done;
    }
    CHECK(done >= 6);
  }

  SECTION("an engineered violation stops the expansion with a recorded reason") {
    // V inside J after one reduction round: force it by a collection whose E
    // is too small for normalization to proceed.
    ZCollection c;
    c.h = 2;
    c.u = ComplexMatrix(2, 1, {1, 0});
    c.e = Subspace::zero(2);
    c.j = Subspace::from_span(ComplexMatrix(2, 1, {0, 1}));
    c.phases.push_back(Subspace::from_span(ComplexMatrix(2, 1, {1, 1})));
    c.phases.push_back(Subspace::from_span(ComplexMatrix(2, 1, {1, -1})));
    REQUIRE(validate(c).all_pass());
    // E = 0 means the closed form is exact and the expansion stops cleanly
    const CFExpansion exp = continued_fraction(c, 8);
    CHECK(exp.stop == CFStop::zero_dimension);
    const MaterialAssignment z = rng.annulus_point(2);
    CHECK(approx_eq(cf_evaluate(exp, z), solve_z(c, z).value, 1e-9));
  }

  SECTION("assumption failures are recorded as stop reasons") {
    int blocked = 0;
    for (int trial = 0; trial < 200 && blocked < 3; ++trial) {
      ZGenOptions o;
      o.max_m = 2;
      o.max_n = 4;
      ZCollection c = random_z_collection(rng, o);
      c = prune_z(c).first;
      if (c.n() < 2 || c.e.dim() == 0) continue;
      const CFExpansion exp = continued_fraction(c, 16);
      if (exp.stop == CFStop::reduction_blocked || exp.stop == CFStop::normalization_blocked) {
        ++blocked;
        CHECK_FALSE(exp.stop_detail.empty());
        const MaterialAssignment z = rng.annulus_point(c.n());
        ComplexMatrix got;
        try {
          got = cf_evaluate(exp, z);
        } catch (const Error&) {
          continue;
        }
        const ComplexMatrix want = solve_z(c, z).value;
        CHECK(approx_eq(got, want, 1e-7 * std::max(1.0, want.max_abs())));
      }
    }
    CHECK(blocked >= 1);
  }

  SECTION("truncated reconstruction improves with depth near the unit point") {
    int done = 0;
    for (int trial = 0; trial < 120 && done < 5; ++trial) {
      ZGenOptions o;
      o.scalar_u = true;
      o.max_n = 2;
      o.max_h = 8;
      ZCollection c = random_z_collection(rng, o);
      if (c.n() != 2) continue;
      c = prune_z(c).first;
      const CFExpansion exp = continued_fraction(c, 16);
      if (exp.stop != CFStop::zero_dimension || exp.levels.size() < 3) continue;
      std::vector<cplx> z(2, cplx(1.0));
      z[0] += 0.02 * rng.gauss();
      const MaterialAssignment ma(z);
      const ComplexMatrix want = solve_z(c, ma).value;
      double prev = 1e100;
      bool monotone = true;
      for (std::size_t d = 0; d <= exp.levels.size(); ++d) {
        const double err = (cf_evaluate_truncated(exp, ma, d) - want).max_abs();
        if (err > prev * 1.01 + 1e-12) monotone = false;
        prev = err;
      }
      CHECK(monotone);
      ++done;
    }
    CHECK(done >= 5);
  }

  SECTION("a per-level rescaling hook is undone by the evaluator") {
    int done = 0;
    for (int trial = 0; trial < 30 && done < 3; ++trial) {
      ZGenOptions o;
      o.scalar_u = true;
      o.max_n = 2;
      o.max_h = 6;
      ZCollection c = random_z_collection(rng, o);
      if (c.n() != 2) continue;
      c = prune_z(c).first;
      CFHook hook = [](std::size_t level, const YCollection& y) -> std::optional<ScalingVector> {
        if (level != 0) return std::nullopt;
        ScalingVector sv;
        sv.c_e.assign(y.n(), cplx(2.0, 0.5));
        sv.c_j.assign(y.n(), cplx(1.0, 0.0));
        return sv;
      };
      CFExpansion exp;
      try {
        exp = continued_fraction(c, 16, Tolerance{}, hook);
      } catch (const Error&) {
        continue;
      }
      if (exp.stop == CFStop::reduction_blocked && exp.levels.empty()) continue;
      const MaterialAssignment z = rng.annulus_point(2);
      ComplexMatrix got;
      try {
        got = cf_evaluate(exp, z);
      } catch (const Error&) {
        continue;
      }
      const ComplexMatrix want = solve_z(c, z).value;
      CHECK(approx_eq(got, want, 1e-7 * std::max(1.0, want.max_abs())));
      ++done;
    }
    CHECK(done >= 3);
  }
}
