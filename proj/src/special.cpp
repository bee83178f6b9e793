#include "cavity/special.hpp"

#include <cmath>
#include <string>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/bessel_prime.hpp>

namespace cavity {

namespace {

void check(int n, BesselKind kind, double x) {
  if (n < 0 || n > kMaxBesselOrder)
    throw numerical_error("bessel_domain", "Bessel order " + std::to_string(n) + " outside 0..60");
  if (!std::isfinite(x) || x > kMaxBesselArg)
    throw numerical_error("bessel_domain", "Bessel argument outside the supported range");
  if (kind == BesselKind::Y ? x <= 0 : x < 0)
    throw numerical_error("bessel_domain", "Bessel argument must be positive");
}

}  // namespace

double bessel(int n, BesselKind kind, double x) {
  check(n, kind, x);
  if (kind == BesselKind::J) return boost::math::cyl_bessel_j(n, x);
  return boost::math::cyl_neumann(n, x);
}

double bessel_j(int n, double x) { return bessel(n, BesselKind::J, x); }
double bessel_y(int n, double x) { return bessel(n, BesselKind::Y, x); }

double bessel_j_deriv(int n, double x) {
  check(n, BesselKind::J, x);
  return boost::math::cyl_bessel_j_prime(n, x);
}

double bessel_y_deriv(int n, double x) {
  check(n, BesselKind::Y, x);
  return boost::math::cyl_neumann_prime(n, x);
}

cplx hankel1(int n, double x) {
  int m = std::abs(n);
  cplx h(bessel_j(m, x), bessel_y(m, x));
  return (n < 0 && (m % 2)) ? -h : h;
}

cplx hankel1_deriv(int n, double x) {
  int m = std::abs(n);
  cplx h(bessel_j_deriv(m, x), bessel_y_deriv(m, x));
  return (n < 0 && (m % 2)) ? -h : h;
}

cplx fundamental_2d(double k, const Point& x, const Point& z) {
  double r = (x - z).norm();
  if (r == 0) throw numerical_error("singular_point", "fundamental solution evaluated at x = z");
  return 0.25 * kI * hankel1(0, k * r);
}

std::array<cplx, 2> grad_fundamental_2d(double k, const Point& x, const Point& z) {
  Point d = x - z;
  double r = d.norm();
  if (r == 0) throw numerical_error("singular_point", "fundamental solution evaluated at x = z");
  // d/dr (i/4) H0(kr) = -(ik/4) H1(kr)
  cplx g = -0.25 * kI * k * hankel1(1, k * r) / r;
  return {g * d.x(), g * d.y()};
}

cplx fundamental_3d(double k, const Eigen::Vector3d& x, const Eigen::Vector3d& z) {
  double r = (x - z).norm();
  if (r == 0) throw numerical_error("singular_point", "fundamental solution evaluated at x = z");
  return std::exp(kI * (k * r)) / (4 * kPi * r);
}

}  // namespace cavity
