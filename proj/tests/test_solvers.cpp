#include "subalg/canonical.hpp"

#include "support.hpp"

using namespace subalg;
using testsupport::approx_eq;
using testsupport::solve_y_oracle;
using testsupport::solve_z_oracle;

namespace {

cplx scalar_solve_z(const ZCollection& c, cplx z1, cplx z2) {
  return solve_z(c, MaterialAssignment{z1, z2}).value(0, 0);
}

}  // namespace

TEST_CASE("square collection reproduces z1^2/z2") {
  const ZCollection c = scalar_square_collection();
  REQUIRE(validate(c).all_pass());
  CHECK(std::abs(scalar_solve_z(c, cplx(2.0), cplx(1.0)) - cplx(4.0)) < 1e-9);

  Rng rng(20240030);
  for (int i = 0; i < 20; ++i) {
    const cplx z1 = rng.annulus(), z2 = rng.annulus();
    const cplx want = z1 * z1 / z2;
    CHECK(std::abs(scalar_solve_z(c, z1, z2) - want) < 1e-9 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("weighted average collection") {
  Rng rng(20240031);
  const cplx w(0.3, 0.7);
  const ZCollection c = weighted_average_collection(w);
  REQUIRE(validate(c).all_pass());
  for (int i = 0; i < 20; ++i) {
    const cplx z1 = rng.annulus(), z2 = rng.annulus();
    const cplx want = w * z1 + (cplx(1.0) - w) * z2;
    CHECK(std::abs(scalar_solve_z(c, z1, z2) - want) < 1e-9 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("scalar Y collection gives Y = z1") {
  const YCollection c = y_scalar_collection({cplx(1.0), cplx(0.0)});
  Rng rng(20240032);
  for (int i = 0; i < 10; ++i) {
    const MaterialAssignment z = rng.annulus_point(2);
    const AssociatedEval y = solve_y(c, z);
    REQUIRE(y.value.rows() == 1);
    CHECK(std::abs(y.value(0, 0) - z.z[0]) < 1e-9);
  }
}

TEST_CASE("two dimensional Y block") {
  Rng rng(20240033);
  YBlockParams p;
  p.e13 = rng.gauss();
  p.e14 = rng.gauss();
  p.e23 = rng.gauss();
  p.e24 = rng.gauss();
  p.j31 = rng.gauss();
  p.j32 = rng.gauss();
  p.j41 = rng.gauss();
  p.j42 = rng.gauss();
  const YCollection c = y_block_collection(p);
  REQUIRE(validate(c).all_pass());
  // Y(z1) = z1 A with A determined by the orientation parameters (the solve
  // convention J1 = -Y E1 puts a sign on each entry).
  ComplexMatrix a(2, 2);
  a(0, 0) = -(p.e13 * p.j31 + p.e14 * p.j41);
  a(1, 0) = -(p.e13 * p.j32 + p.e14 * p.j42);
  a(0, 1) = -(p.e23 * p.j31 + p.e24 * p.j41);
  a(1, 1) = -(p.e23 * p.j32 + p.e24 * p.j42);
  for (int i = 0; i < 5; ++i) {
    const cplx z1 = rng.annulus();
    const AssociatedEval y = solve_y(c, MaterialAssignment{z1});
    CHECK(approx_eq(y.value, z1 * a, 1e-9 * std::max(1.0, a.max_abs())));
  }
}

TEST_CASE("additive zero has the zero function") {
  const YCollection c = additive_zero_y(2, 3);
  Rng rng(20240034);
  const AssociatedEval y = solve_y(c, rng.annulus_point(3));
  CHECK(y.value.max_abs() < 1e-12);
}

TEST_CASE("closed forms agree with the constraint-system oracle") {
  Rng rng(20240035);
  for (int trial = 0; trial < 100; ++trial) {
    const ZCollection zc = random_z_collection(rng);
    const MaterialAssignment z = rng.annulus_point(zc.n());
    const ComplexMatrix want = solve_z_oracle(zc, z);
    CHECK(approx_eq(solve_z(zc, z).value, want, 1e-7 * std::max(1.0, want.max_abs())));

    const YCollection yc = random_y_collection(rng);
    const MaterialAssignment zy = rng.annulus_point(yc.n());
    const ComplexMatrix wy = solve_y_oracle(yc, zy);
    CHECK(approx_eq(solve_y(yc, zy).value, wy, 1e-7 * std::max(1.0, wy.max_abs())));
  }
}

TEST_CASE("direct and shifted formulas cross-agree") {
  Rng rng(20240036);
  SolveOptions direct{SolveMethod::direct, std::nullopt};
  SolveOptions shifted{SolveMethod::shifted, cplx(1.0, 0.0)};
  for (int trial = 0; trial < 100; ++trial) {
    const ZCollection zc = random_z_collection(rng);
    const MaterialAssignment z = rng.annulus_point(zc.n());
    const ComplexMatrix a = solve_z(zc, z, direct).value;
    const ComplexMatrix b = solve_z(zc, z, shifted).value;
    CHECK((a - b).max_abs() < 1e-8 * std::max(1.0, a.max_abs()));

    const YCollection yc = random_y_collection(rng);
    const MaterialAssignment zy = rng.annulus_point(yc.n());
    const ComplexMatrix ay = solve_y(yc, zy, direct).value;
    const ComplexMatrix by = solve_y(yc, zy, shifted).value;
    CHECK((ay - by).max_abs() < 1e-8 * std::max(1.0, ay.max_abs()));
  }
}

TEST_CASE("homogeneity and normalization") {
  Rng rng(20240037);
  for (int trial = 0; trial < 30; ++trial) {
    const ZCollection zc = random_z_collection(rng);
    CHECK(approx_eq(solve_z(zc, MaterialAssignment::ones(zc.n())).value,
                    ComplexMatrix::identity(zc.m()), 1e-9));

    const MaterialAssignment z = rng.annulus_point(zc.n());
    const cplx lam = rng.annulus();
    std::vector<cplx> scaled(zc.n());
    for (std::size_t i = 0; i < zc.n(); ++i) scaled[i] = lam * z.z[i];
    const ComplexMatrix a = solve_z(zc, MaterialAssignment(scaled)).value;
    const ComplexMatrix b = lam * solve_z(zc, z).value;
    CHECK((a - b).max_abs() < 1e-9 * std::max(1.0, b.max_abs()));

    const YCollection yc = random_y_collection(rng);
    const MaterialAssignment zy = rng.annulus_point(yc.n());
    std::vector<cplx> scaledy(yc.n());
    for (std::size_t i = 0; i < yc.n(); ++i) scaledy[i] = lam * zy.z[i];
    const ComplexMatrix ay = solve_y(yc, MaterialAssignment(scaledy)).value;
    const ComplexMatrix by = lam * solve_y(yc, zy).value;
    CHECK((ay - by).max_abs() < 1e-9 * std::max(1.0, by.max_abs()));
  }
}

TEST_CASE("superfunction of the Y block has graded entries") {
  Rng rng(20240038);
  YBlockParams p;
  p.e13 = rng.gauss();
  p.e14 = rng.gauss();
  p.e23 = rng.gauss();
  p.e24 = rng.gauss();
  p.j31 = rng.gauss();
  p.j32 = rng.gauss();
  p.j41 = rng.gauss();
  p.j42 = rng.gauss();
  const YCollection c = y_block_collection(p);
  const Superfunction s =
      make_superfunction(c, c.v.block(0, 0, 4, 1), c.v.block(0, 1, 4, 1));
  REQUIRE(validate(s).all_pass());

  const cplx za(1.3, 0.4), zb(0.7, -0.2);
  const ComplexMatrix fa = solve_superfunction(s, MaterialAssignment{za}).value;
  const ComplexMatrix fb = solve_superfunction(s, MaterialAssignment{zb}).value;
  // degrees 0, -1, +1, 0 in the material constant
  CHECK(std::abs(fa(0, 0) - fb(0, 0)) < 1e-9);
  CHECK(std::abs(fa(1, 1) - fb(1, 1)) < 1e-9);
  CHECK(std::abs(fa(0, 1) * za - fb(0, 1) * zb) < 1e-9 * std::max(1.0, std::abs(fa(0, 1) * za)));
  CHECK(std::abs(fa(1, 0) / za - fb(1, 0) / zb) < 1e-9 * std::max(1.0, std::abs(fa(1, 0) / za)));

  // consistent with assembling F from the Y blocks
  const ComplexMatrix y = solve_y(c, MaterialAssignment{za}).value;
  CHECK(approx_eq(fa, f_from_y(y, 1), 1e-8 * std::max(1.0, fa.max_abs())));
}

TEST_CASE("superfunction solve agrees with Y-block assembly on random input") {
  Rng rng(20240039);
  int done = 0;
  while (done < 20) {
    const Superfunction s = random_superfunction(rng, rng.index(1, 2));
    const MaterialAssignment z = rng.annulus_point(s.n());
    ComplexMatrix f1, f2;
    try {
      f1 = solve_superfunction(s, z).value;
      f2 = f_from_y(solve_y(s.base, z).value, s.ports());
    } catch (const Error&) {
      continue;  // coupling singular for this draw
    }
    CHECK(approx_eq(f1, f2, 1e-7 * std::max(1.0, f1.max_abs())));
    ++done;
  }
}

TEST_CASE("y_from_f inverts f_from_y") {
  Rng rng(20240040);
  int done = 0;
  while (done < 20) {
    const Superfunction s = random_superfunction(rng, rng.index(1, 2));
    const MaterialAssignment z = rng.annulus_point(s.n());
    ComplexMatrix y, f;
    try {
      y = solve_y(s.base, z).value;
      f = f_from_y(y, s.ports());
      const ComplexMatrix back = y_from_f(f, s.ports());
      CHECK(approx_eq(back, y, 1e-9 * std::max(1.0, y.max_abs())));
    } catch (const Error&) {
      continue;
    }
    ++done;
  }
}

TEST_CASE("y_from_f rejects a vanishing transfer block") {
  const ComplexMatrix f = ComplexMatrix::identity(2);  // F^{EJ} = 0
  CHECK_THROWS_MATCHES(y_from_f(f, 1), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == errc::singular_fej;
                       }));
}

TEST_CASE("degenerate coupling is reported") {
  // V = the whole 2d space, E and J the two port lines: the constitutive rows
  // vanish and the input pins cannot determine the outputs.
  YCollection c;
  c.k = 2;
  c.v = ComplexMatrix::identity(2);
  c.e = Subspace::from_span(ComplexMatrix(2, 1, {1, 0}));
  c.j = Subspace::from_span(ComplexMatrix(2, 1, {0, 1}));
  c.phases.push_back(Subspace::zero(2));
  const Superfunction s = make_superfunction(c, ComplexMatrix(2, 1, {1, 0}), ComplexMatrix(2, 1, {0, 1}));
  CHECK_THROWS_MATCHES(solve_superfunction(s, MaterialAssignment{cplx(1.0)}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == errc::singular_coupling;
                       }));
}

TEST_CASE("series expansion") {
  Rng rng(20240041);

  SECTION("truncates at order zero on the expansion point") {
    const ZCollection c = random_z_collection(rng);
    const cplx z0(1.2, 0.1);
    const MaterialAssignment z(std::vector<cplx>(c.n(), z0));
    const SeriesExpansion se = series_expand(c, z, z0, 10);
    CHECK(approx_eq(se.partial_sum(0), z0 * ComplexMatrix::identity(c.m()), 1e-12));
    for (std::size_t j = 1; j < se.z_terms.size(); ++j) CHECK(se.z_terms[j].max_abs() < 1e-12);
  }

  SECTION("single phase is exact at order one") {
    ZCollection c;
    c.h = 3;
    c.u = ComplexMatrix(3, 1, {1, 0, 0});
    c.e = Subspace::from_span(ComplexMatrix(3, 1, {0, 1, 0}));
    c.j = Subspace::from_span(ComplexMatrix(3, 1, {0, 0, 1}));
    c.phases.push_back(Subspace::full(3));
    const cplx z1(0.8, 0.5);
    const SeriesExpansion se = series_expand(c, MaterialAssignment{z1}, cplx(1.0), 6);
    CHECK(approx_eq(se.partial_sum(1), z1 * ComplexMatrix::identity(1), 1e-12));
    CHECK(approx_eq(se.partial_sum(6), solve_z(c, MaterialAssignment{z1}).value, 1e-12));
  }

  SECTION("converges to the solve on contractive input") {
    for (int trial = 0; trial < 10; ++trial) {
      const ZCollection c = random_z_collection(rng);
      // keep the perturbation small relative to the oblique projector norms
      const double eps = 0.1 / (1.0 + projectors(c).g1.fro_norm());
      std::vector<cplx> z(c.n());
      for (cplx& v : z) v = cplx(1.0) + eps * rng.gauss();
      const MaterialAssignment ma(z);
      const SeriesExpansion se = series_expand(c, ma, cplx(1.0), 40);
      const ComplexMatrix want = solve_z(c, ma).value;
      CHECK((se.partial_sum(40) - want).max_abs() < 1e-8 * std::max(1.0, want.max_abs()));
    }
  }

  SECTION("divergence is detected") {
    // an expansion point far from the materials makes the step operator
    // expansive rather than contractive
    const ZCollection c = scalar_square_collection();
    CHECK_THROWS_MATCHES(series_expand(c, MaterialAssignment{cplx(2.0), cplx(1.0)}, cplx(0.2), 60),
                         Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == errc::divergent;
                         }));
  }
}
