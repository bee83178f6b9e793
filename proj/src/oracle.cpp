#include <cmath>

#include "cavity/forward.hpp"
#include "cavity/special.hpp"

namespace cavity {

cplx concentric_oracle(double R, const BoundaryCondition& bc, const ReferenceBall& ball, double k,
                       const Point& z, const Point& x, int* order_used) {
  if (ball.center.norm() != 0)
    throw config_error("unsupported_geometry", "oracle requires the ball centered at the origin");
  if (!bc.cos_coef.empty() || !bc.sin_coef.empty())
    throw config_error("unsupported_geometry", "oracle requires a constant impedance");
  const double rb = ball.radius, rz = z.norm(), rx = x.norm();
  if (!(rb < R) || !(rz > rb && rz < R) || !(rx > rb && rx < R))
    throw config_error("unsupported_geometry", "oracle points must lie strictly between the radii");
  const cplx lam = bc.c0, il0 = kI * ball.lambda0;
  const double dth = std::atan2(x.y(), x.x()) - std::atan2(z.y(), z.x());

  cplx sum = 0;
  int quiet = 0;
  for (int n = 0; n <= kMaxBesselOrder; ++n) {
    double JR = bessel_j(n, k * R), dJR = bessel_j_deriv(n, k * R);
    cplx HR = hankel1(n, k * R), dHR = hankel1_deriv(n, k * R);
    double Jb = bessel_j(n, k * rb), dJb = bessel_j_deriv(n, k * rb);
    cplx Hb = hankel1(n, k * rb), dHb = hankel1_deriv(n, k * rb);
    double Jz = bessel_j(n, k * rz);
    cplx Hz = hankel1(n, k * rz);

    // Unknowns scaled as A = a sJ, B = b sH to keep the 2x2 system balanced.
    const double sJ = std::abs(JR) + std::abs(dJR);
    const double sH = std::abs(Hb);
    cplx a11, a12, f1;
    if (bc.kind == BcKind::sound_soft) {
      a11 = JR;
      a12 = HR;
      f1 = -0.25 * kI * Jz * HR;
    } else {
      a11 = k * dJR + lam * JR;
      a12 = k * dHR + lam * HR;
      f1 = -0.25 * kI * Jz * a12;
    }
    cplx a21 = k * dJb + il0 * Jb, a22 = k * dHb + il0 * Hb;
    cplx f2 = -0.25 * kI * Hz * a21;
    a11 /= sJ;
    a21 /= sJ;
    a12 /= sH;
    a22 /= sH;
    cplx det = a11 * a22 - a12 * a21;
    cplx A = (f1 * a22 - a12 * f2) / det, B = (a11 * f2 - a21 * f1) / det;
    cplx term = (A * (bessel_j(n, k * rx) / sJ) + B * (hankel1(n, k * rx) / sH)) *
                ((n == 0 ? 1.0 : 2.0) * std::cos(n * dth));
    sum += term;
    bool small = std::abs(term) < 1e-12 * std::abs(sum);
    quiet = small ? quiet + 1 : 0;
    if (n >= 4 && quiet >= 3) {
      if (order_used) *order_used = n;
      return sum;
    }
  }
  throw numerical_error("oracle_truncation", "cylindrical series did not converge within order 60");
}

}  // namespace cavity
