#include "doctest.h"

#include <cmath>

#include "cavity/special.hpp"

using namespace cavity;

namespace {

// Power series, adequate for small arguments.
double j_series(int n, double x) {
  double term = std::pow(x / 2, n) / std::tgamma(n + 1.0), sum = term;
  for (int m = 1; m < 80; ++m) {
    term *= -(x * x / 4) / (m * double(m + n));
    sum += term;
  }
  return sum;
}

}  // namespace

TEST_CASE("J against its power series") {
  for (int n = 0; n <= 6; ++n)
    for (double x : {0.05, 0.5, 1.7, 4.0, 8.5})
      CHECK(bessel_j(n, x) == doctest::Approx(j_series(n, x)).epsilon(1e-11));
  CHECK(bessel_j(0, 0) == 1);
  CHECK(bessel_j(3, 0) == 0);
}

TEST_CASE("Wronskian ties Y to J") {
  for (int n = 0; n <= 10; ++n)
    for (double x : {0.3, 1.0, 5.0, 22.0, 300.0}) {
      double w = bessel_j(n + 1, x) * bessel_y(n, x) - bessel_j(n, x) * bessel_y(n + 1, x);
      CHECK(w == doctest::Approx(2 / (kPi * x)).epsilon(1e-10));
    }
}

TEST_CASE("derivatives match central differences") {
  const double h = 1e-6;
  for (int n : {0, 1, 4})
    for (double x : {0.7, 3.3, 9.1}) {
      CHECK(bessel_j_deriv(n, x) == doctest::Approx((bessel_j(n, x + h) - bessel_j(n, x - h)) / (2 * h)).epsilon(1e-7));
      CHECK(bessel_y_deriv(n, x) == doctest::Approx((bessel_y(n, x + h) - bessel_y(n, x - h)) / (2 * h)).epsilon(1e-7));
      cplx d = hankel1_deriv(n, x), fd = (hankel1(n, x + h) - hankel1(n, x - h)) / (2 * h);
      CHECK(std::abs(d - fd) < 1e-7 * std::abs(d) + 1e-9);
    }
}

TEST_CASE("negative Hankel orders by reflection") {
  for (int n = 1; n <= 5; ++n) {
    cplx a = hankel1(-n, 2.3), b = hankel1(n, 2.3) * (n % 2 ? -1.0 : 1.0);
    CHECK(std::abs(a - b) < 1e-15 * std::abs(b));
  }
}

TEST_CASE("small-argument asymptotics of H0") {
  // H0(x) ~ 1 + (2i/pi)(ln(x/2) + gamma) as x -> 0
  double x = 1e-6;
  cplx ref(1.0, 2 / kPi * (std::log(x / 2) + kEulerGamma));
  CHECK(std::abs(hankel1(0, x) - ref) < 1e-10);
}

TEST_CASE("fundamental solutions") {
  Point x(0.3, -0.2), z(-0.4, 0.5);
  double k = 2.5, r = (x - z).norm();
  CHECK(std::abs(fundamental_2d(k, x, z) - 0.25 * kI * hankel1(0, k * r)) < 1e-16);
  CHECK(std::abs(fundamental_2d(k, x, z) - fundamental_2d(k, z, x)) == 0);
  const double h = 1e-6;
  auto g = grad_fundamental_2d(k, x, z);
  cplx gx = (fundamental_2d(k, x + Point(h, 0), z) - fundamental_2d(k, x - Point(h, 0), z)) / (2 * h);
  cplx gy = (fundamental_2d(k, x + Point(0, h), z) - fundamental_2d(k, x - Point(0, h), z)) / (2 * h);
  CHECK(std::abs(g[0] - gx) < 1e-8);
  CHECK(std::abs(g[1] - gy) < 1e-8);
  Eigen::Vector3d a(0, 0, 0), b(1, 2, 2);
  CHECK(std::abs(fundamental_3d(1, a, b) - std::exp(kI * 3.0) / (12 * kPi)) < 1e-15);
}

TEST_CASE("range errors") {
  CHECK_THROWS_AS(bessel_j(61, 1.0), Error);
  CHECK_THROWS_AS(bessel_j(0, 2e4), Error);
  CHECK_THROWS_AS(bessel_y(0, 0.0), Error);
  CHECK_THROWS_AS(bessel_j(0, -1.0), Error);
  CHECK_THROWS_AS(fundamental_2d(1, Point::Zero(), Point::Zero()), Error);
}
