#include "doctest.h"

#include <cmath>

#include "cavity/geometry.hpp"

using namespace cavity;

TEST_CASE("circle points, normals and speed") {
  ClosedCurve c = ClosedCurve::circle(Point(1, -2), 3);
  for (double t : {0.0, 0.7, 2.1, 4.4}) {
    CurvePoint p = c.evaluate(t);
    CHECK((p.x - Point(1 + 3 * std::cos(t), -2 + 3 * std::sin(t))).norm() < 1e-14);
    CHECK((p.normal - Point(std::cos(t), std::sin(t))).norm() < 1e-14);
    CHECK(p.speed == doctest::Approx(3));
  }
  CHECK(c.diameter() == doctest::Approx(6));
}

TEST_CASE("kite and star derivatives match finite differences") {
  const double h = 1e-5;
  for (const ClosedCurve& c : {ClosedCurve::kite(Point(0.2, 0.1), 1.3),
                               ClosedCurve::star(Point::Zero(), {1.5, 0.2, -0.1}, {0.1, 0.05})}) {
    for (double t : {0.3, 1.9, 3.2, 5.5}) {
      Point fd1 = (c.position(t + h) - c.position(t - h)) / (2 * h);
      Point fd2 = (c.position(t + h) - 2 * c.position(t) + c.position(t - h)) / (h * h);
      CHECK((c.d1(t) - fd1).norm() < 1e-8);
      CHECK((c.d2(t) - fd2).norm() < 1e-4);
      CurvePoint p = c.evaluate(t);
      CHECK(std::abs(p.normal.dot(p.tangent)) < 1e-14);
      // Outward: a small step along the normal leaves the domain.
      CHECK_FALSE(c.contains(p.x + 1e-3 * p.normal));
      CHECK(c.contains(p.x - 1e-3 * p.normal));
    }
  }
}

TEST_CASE("distance to a kite agrees with dense sampling") {
  ClosedCurve k = ClosedCurve::kite(Point::Zero(), 1.0);
  auto dense = k.sample(20000);
  for (Point p : {Point(0.1, 0.2), Point(-0.5, 0.9), Point(2.5, -1.0)}) {
    double brute = 1e9;
    for (const Point& q : dense) brute = std::min(brute, (q - p).norm());
    CHECK(k.distance(p) <= brute + 1e-12);
    CHECK(k.distance(p) > brute - 1e-6);
  }
}

TEST_CASE("star rejects nonpositive radial functions") {
  CHECK_THROWS_AS(ClosedCurve::star(Point::Zero(), {0.5, 1.0}, {0.0}), Error);
  CHECK_THROWS_AS(ClosedCurve::circle(Point::Zero(), -1), Error);
}

TEST_CASE("hausdorff of concentric circles is the radius gap") {
  ClosedCurve a = ClosedCurve::circle(Point::Zero(), 1), b = ClosedCurve::circle(Point::Zero(), 1.3);
  CHECK(hausdorff(a, b) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(hausdorff(a, a) < 1e-14);
  ClosedCurve s = ClosedCurve::star(Point::Zero(), {1.3}, {});
  CHECK(hausdorff(a, s) == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("simple curves") {
  CHECK(is_simple(ClosedCurve::kite(Point::Zero(), 1)));
  CHECK(is_simple(ClosedCurve::star(Point::Zero(), {1, 0.3, 0.2}, {0.1, 0.1})));
}

TEST_CASE("quadrature nodes") {
  ClosedCurve c = ClosedCurve::circle(Point::Zero(), 2);
  Nodes q = quadrature_nodes(c, 16);
  CHECK(q.n == 16);
  CHECK(q.t[1] == doctest::Approx(2 * kPi / 16));
  double len = 0;
  for (double s : q.speed) len += s * 2 * kPi / 16;
  CHECK(len == doctest::Approx(4 * kPi));
  CHECK_THROWS_AS(quadrature_nodes(c, 15), Error);
  CHECK_THROWS_AS(quadrature_nodes(c, 6), Error);
}

TEST_CASE("admissible pairs") {
  AdmissiblePair p = make_admissible(2, Point(0, 0.5), 1.0, 0, kPi);
  auto a = p.arc.angles(5);
  CHECK(a.front() == doctest::Approx(0));
  CHECK(a.back() == doctest::Approx(kPi));
  CHECK((p.arc.point(kPi / 2) - Point(0, 1.5)).norm() < 1e-14);
  // k r >= pi is rejected.
  CHECK_THROWS_AS(make_admissible(4, Point::Zero(), 1.0, 0, 1), Error);
}
