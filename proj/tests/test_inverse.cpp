#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cavity/inverse.hpp"

using namespace cavity;

namespace {

struct Problem {
  ScatteringConfig truth;
  InversionData data;
};

Problem make_problem(const BoundaryCondition& bc = BoundaryCondition::dirichlet()) {
  Problem p;
  p.truth.k = 2;
  p.truth.cavity = ClosedCurve::circle(Point::Zero(), 1.5);
  p.truth.bc = bc;
  p.truth.ball = ReferenceBall{Point(0, -0.7), 0.25, 2.0};
  p.truth.n_D = 96;
  p.truth.n_B = 48;
  auto sig = make_admissible(2, Point(0, 0.3), 0.7, 0, kPi);
  auto gam = make_admissible(2, Point(0, 0.3), 0.35, 0, kPi);
  p.data.base = p.truth;
  p.data.grid = build_grid(p.truth, sig, gam, Point(-0.8, -0.4), 16, 8, {});
  p.data.field = simulate(p.truth, p.data.grid);
  return p;
}

const Problem& dirichlet_problem() {
  static const Problem p = make_problem();
  return p;
}

}  // namespace

TEST_CASE("star parameters round-trip and fit") {
  StarShapeParam s{Point(0.1, -0.2), {1.3, 0.1, -0.05}, {0.02, 0.07}};
  RVec c = s.coefficients();
  REQUIRE(c.size() == 5);
  StarShapeParam t = s.with_coefficients(c);
  CHECK(t.a == s.a);
  CHECK(t.b == s.b);
  StarShapeParam f = StarShapeParam::fit(s.curve(), s.center, 2);
  CHECK((f.coefficients() - c).norm() < 1e-8);
  StarShapeParam bad{Point::Zero(), {0.1, 0.5}, {0}};
  CHECK_THROWS_AS(bad.curve(), Error);
  StarShapeParam circ = StarShapeParam::circle(Point(1, 1), 0.5, 3);
  CHECK(circ.order() == 3);
  CHECK(std::abs(circ.curve().position(0.7).x() - (1 + 0.5 * std::cos(0.7))) < 1e-14);
}

TEST_CASE("misfit vanishes at the truth and grows away from it") {
  const Problem& p = dirichlet_problem();
  BoundaryCondition bc = BoundaryCondition::dirichlet();
  CHECK(misfit(StarShapeParam::circle(Point::Zero(), 1.5), bc, p.data) < 1e-8);
  CHECK(misfit(StarShapeParam::circle(Point::Zero(), 1.65), bc, p.data) > 1e-2);
  CHECK(misfit(StarShapeParam::circle(Point::Zero(), 1.5), BoundaryCondition::impedance(1.0), p.data) > 1e-2);
}

TEST_CASE("misfit is invariant under a permutation of sources") {
  const Problem& p = dirichlet_problem();
  InversionData q = p.data;
  int ns = q.grid.n_sources();
  std::reverse(q.grid.sources.begin(), q.grid.sources.end());
  for (int j = 0; j < ns; ++j) q.field.col(j) = p.data.field.col(ns - 1 - j);
  StarShapeParam s{Point::Zero(), {1.4, 0.03}, {-0.02}};
  BoundaryCondition bc = BoundaryCondition::dirichlet();
  double a = misfit(s, bc, p.data), b = misfit(s, bc, q);
  CHECK(std::abs(a - b) < 1e-12 * a);
}

TEST_CASE("truth beats random perturbations") {
  const Problem& p = dirichlet_problem();
  BoundaryCondition bc = BoundaryCondition::dirichlet();
  StarShapeParam truth = StarShapeParam::circle(Point::Zero(), 1.5, 2);
  double m0 = misfit(truth, bc, p.data);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    RVec c = truth.coefficients();
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) += 0.05 * 1.5 * u(rng) / double(1 + i);
    CHECK(misfit(truth.with_coefficients(c), bc, p.data) > m0);
  }
}

TEST_CASE("forward and central differences agree along directions") {
  const Problem& p = dirichlet_problem();
  BoundaryCondition bc = BoundaryCondition::dirichlet();
  StarShapeParam s{Point::Zero(), {1.4, 0.03, 0.01}, {-0.02, 0.01}};
  RVec c = s.coefficients();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int k = 0; k < 5; ++k) {
    RVec d(c.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = g(rng);
    d.normalize();
    double h = 1e-4;
    double m0 = misfit(s, bc, p.data);
    double mp = misfit(s.with_coefficients(c + h * d), bc, p.data);
    double mm = misfit(s.with_coefficients(c - h * d), bc, p.data);
    double fwd = (mp - m0) / h, ctr = (mp - mm) / (2 * h);
    CHECK(std::abs(fwd - ctr) < 1e-3 * std::max(1.0, std::abs(ctr)));
  }
}

TEST_CASE("infinite regularization freezes the shape") {
  const Problem& p = dirichlet_problem();
  ReconstructOptions opt;
  opt.alpha = std::numeric_limits<double>::infinity();
  StarShapeParam init = StarShapeParam::circle(Point::Zero(), 1.2);
  CavityEstimate e = reconstruct(p.data, init, BoundaryCondition::dirichlet(), opt);
  CHECK(e.status == "frozen");
  CHECK(e.shape.a == init.a);
}

TEST_CASE("circle radius is recovered with a monotone trace") {
  const Problem& p = dirichlet_problem();
  CavityEstimate e = reconstruct(p.data, StarShapeParam::circle(Point::Zero(), 1.2),
                                 BoundaryCondition::dirichlet());
  CHECK(std::abs(e.shape.a[0] - 1.5) < 1e-3 * 1.5);
  CHECK(e.misfit < e.initial_misfit);
  for (size_t i = 1; i < e.trace.size(); ++i) CHECK(e.trace[i].objective <= e.trace[i - 1].objective);
}

TEST_CASE("invalid shapes are reported") {
  const Problem& p = dirichlet_problem();
  CHECK(shape_problem(ClosedCurve::circle(Point::Zero(), 1.5), p.data).empty());
  CHECK(!shape_problem(ClosedCurve::circle(Point::Zero(), 0.8), p.data).empty());
  CHECK(!shape_problem(ClosedCurve::circle(Point(0, 0.8), 1.1), p.data).empty());
}
