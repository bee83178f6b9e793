#pragma once

#include <array>

#include "cavity/common.hpp"

namespace cavity {

enum class BesselKind { J, Y };

inline constexpr int kMaxBesselOrder = 60;
inline constexpr double kMaxBesselArg = 1e4;

// Cylindrical Bessel functions of integer order 0..60 on (0, 1e4].
// J also accepts x = 0. Out-of-range input throws a numerical error.
double bessel(int n, BesselKind kind, double x);
double bessel_j(int n, double x);
double bessel_y(int n, double x);
double bessel_j_deriv(int n, double x);
double bessel_y_deriv(int n, double x);

// H_n^(1) = J_n + i Y_n; negative orders via H_{-n} = (-1)^n H_n.
cplx hankel1(int n, double x);
cplx hankel1_deriv(int n, double x);

// Phi(x, z) = (i/4) H_0^(1)(k |x - z|)
cplx fundamental_2d(double k, const Point& x, const Point& z);
// Gradient with respect to x.
std::array<cplx, 2> grad_fundamental_2d(double k, const Point& x, const Point& z);
// exp(ik|x - z|) / (4 pi |x - z|)
cplx fundamental_3d(double k, const Eigen::Vector3d& x, const Eigen::Vector3d& z);

inline constexpr double kEulerGamma = 0.57721566490153286061;

}  // namespace cavity
