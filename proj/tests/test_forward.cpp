#include "doctest.h"

#include <cmath>

#include "cavity/forward.hpp"
#include "cavity/special.hpp"

using namespace cavity;

namespace {

ScatteringConfig concentric(const BoundaryCondition& bc, int n = 64) {
  ScatteringConfig c;
  c.k = 1;
  c.cavity = ClosedCurve::circle(Point::Zero(), 2);
  c.bc = bc;
  c.ball = ReferenceBall{Point::Zero(), 0.5, 1.0};
  c.n_D = n;
  c.n_B = n;
  return c;
}

// Disk without ball, source at the center: u^s = A J0(kr), with A fixed by the
// boundary condition at r = R.
cplx radial_reference(double k, double R, const BoundaryCondition& bc, double r) {
  const cplx q = 0.25 * kI;  // incident field q H0(kr)
  cplx A;
  if (bc.kind == BcKind::sound_soft) {
    A = -q * hankel1(0, k * R) / bessel_j(0, k * R);
  } else {
    cplx lam = bc.c0;
    A = -q * (-k * hankel1(1, k * R) + lam * hankel1(0, k * R)) / (-k * bessel_j(1, k * R) + lam * bessel_j(0, k * R));
  }
  return A * bessel_j(0, k * r);
}

}  // namespace

TEST_CASE("centered source in a bare disk matches the radial solution") {
  for (auto bc : {BoundaryCondition::dirichlet(), BoundaryCondition::impedance(cplx(1.5, 0.2))}) {
    ScatteringConfig c = concentric(bc, 128);
    c.ball.reset();
    Solver s(c);
    DensitySolution sol = s.solve(Point::Zero());
    for (double r : {0.3, 0.9, 1.6}) {
      Point x(r * std::cos(0.4), r * std::sin(0.4));
      cplx ref = radial_reference(1, 2, bc, r);
      CHECK(std::abs(scattered_field(sol, x) - ref) < 1e-10 * std::abs(ref));
    }
  }
}

TEST_CASE("solver agrees with the concentric series") {
  for (auto bc : {BoundaryCondition::dirichlet(), BoundaryCondition::impedance(1.0)}) {
    ScatteringConfig c = concentric(bc, 128);
    Solver s(c);
    for (double r : {0.9, 1.3, 1.6}) {
      Point x(r * std::cos(0.4), r * std::sin(0.4));
      cplx orc = concentric_oracle(2, bc, *c.ball, 1, Point(0.6, 0.3), x);
      cplx num = scattered_field(s.solve(Point(0.6, 0.3)), x);
      CHECK(std::abs(num - orc) < 1e-8 * std::abs(orc));
    }
  }
}

TEST_CASE("boundary conditions hold between nodes") {
  ScatteringConfig c;
  c.k = 2;
  c.cavity = ClosedCurve::star(Point::Zero(), {1.8, 0.15, 0.1}, {0.1, -0.1});
  c.ball = ReferenceBall{Point(0, -0.6), 0.3, 2.0};
  c.n_D = 128;
  c.n_B = 64;
  Point z(0.4, 0.5);
  for (auto bc : {BoundaryCondition::dirichlet(), BoundaryCondition::impedance(0.8)}) {
    c.bc = bc;
    DensitySolution sol = solve_scatter(c, z);
    double worst = 0, worst_b = 0;
    for (double t : {0.11, 1.37, 2.9, 4.05, 5.77}) {
      BoundaryTrace tr = scattered_trace_D(sol, t);
      cplx ui = fundamental_2d(c.k, tr.x, z);
      auto g = grad_fundamental_2d(c.k, tr.x, z);
      cplx dui = g[0] * tr.normal.x() + g[1] * tr.normal.y();
      cplx res = bc.kind == BcKind::sound_soft ? tr.value + ui : tr.normal_derivative + dui + 0.8 * (tr.value + ui);
      worst = std::max(worst, std::abs(res) / std::abs(ui));
      BoundaryTrace tb = scattered_trace_B(sol, t);
      cplx vi = fundamental_2d(c.k, tb.x, z);
      auto gb = grad_fundamental_2d(c.k, tb.x, z);
      cplx dvi = gb[0] * tb.normal.x() + gb[1] * tb.normal.y();
      cplx rb = tb.normal_derivative + dvi + kI * 2.0 * (tb.value + vi);
      worst_b = std::max(worst_b, std::abs(rb) / std::abs(dvi));
    }
    CHECK(worst < 1e-8);
    CHECK(worst_b < 1e-8);
  }
}

TEST_CASE("reciprocity on a kite") {
  ScatteringConfig c;
  c.k = 2;
  c.cavity = ClosedCurve::kite(Point(0.4, 0), 1.5);
  c.ball = ReferenceBall{Point(-0.5, 0), 0.25, 2.0};
  c.n_D = 128;
  for (auto bc : {BoundaryCondition::dirichlet(), BoundaryCondition::impedance(1.0)}) {
    c.bc = bc;
    Solver s(c);
    CHECK(reciprocity_residual(s, Point(0.6, 0.3), Point(0.2, -0.8)) < 1e-10);
    CHECK(reciprocity_residual(s, Point(1.2, -0.1), Point(-0.2, 1.1)) < 1e-10);
  }
}

TEST_CASE("interior Dirichlet eigenvalue without ball is reported as resonance") {
  ScatteringConfig c;
  c.cavity = ClosedCurve::circle(Point::Zero(), 2);
  c.ball.reset();
  // j_{0,1} / 2
  c.k = 2.404825557695773 / 2;
  CHECK(condition_number(c) > 1e8);
  c.k *= 1.1;
  CHECK(condition_number(c) < 1e4);
  c.k /= 1.1;
  c.ball = ReferenceBall{Point(0, -1.3), 0.45, 2.0};
  CHECK(condition_number(c) < 1e4);
}

TEST_CASE("configuration errors") {
  ScatteringConfig c;
  c.k = -1;
  CHECK_THROWS_AS(validate(c), Error);
  c.k = 1;
  c.n_D = 63;
  CHECK_THROWS_AS(validate(c), Error);
  c.n_D = 64;
  c.ball = ReferenceBall{Point(1.9, 0), 0.5, 1};
  CHECK_THROWS_AS(validate(c), Error);
  c.ball = ReferenceBall{Point::Zero(), 0.5, -1};
  CHECK_THROWS_AS(validate(c), Error);
  c.ball = ReferenceBall{};
  c.bc = BoundaryCondition::impedance(cplx(1, -0.5));
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("evaluation and source placement rules") {
  ScatteringConfig c;
  Solver s(c);
  CHECK_THROWS_AS(s.solve(Point(0, 0.1)), Error);   // inside the ball
  CHECK_THROWS_AS(s.solve(Point(3, 0)), Error);     // outside the cavity
  DensitySolution sol = s.solve(Point(1, 0));
  CHECK_THROWS_AS(scattered_field(sol, Point(1.999, 0)), Error);  // too near the boundary
  try {
    scattered_field(sol, Point(1.999, 0));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numerical);
  }
  CHECK(std::isfinite(std::abs(scattered_field(sol, Point(0, 1)))));
}

TEST_CASE("batched fields agree with single solves") {
  ScatteringConfig c;
  c.k = 1.5;
  Solver s(c);
  std::vector<Point> x{Point(0.9, 0.2), Point(-1.0, 0.7)}, z{Point(1.1, -0.4), Point(-0.2, 1.2)};
  CMat U = s.total_fields(x, z);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(U(i, j) - total_field(s.solve(z[j]), x[i])) < 1e-13);
}
