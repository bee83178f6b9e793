#pragma once

#include <vector>

#include "cavity/common.hpp"

namespace cavity {

enum class CurveKind { circle, kite, star };

struct CurvePoint {
  Point x;
  Point tangent;  // unit
  Point normal;   // unit, outward for positively oriented curves
  double speed;
};

// Positively oriented, 2pi-periodic C2 curve.
//   circle: c + r (cos t, sin t)
//   kite:   c + s (cos t + 0.65 cos 2t - 0.65, 1.5 sin t)
//   star:   c + rho(t) (cos t, sin t), rho = a0 + sum a_j cos jt + b_j sin jt
class ClosedCurve {
 public:
  static ClosedCurve circle(const Point& center, double radius);
  static ClosedCurve kite(const Point& center, double scale = 1.0);
  static ClosedCurve star(const Point& center, std::vector<double> a, std::vector<double> b);

  CurveKind kind() const { return kind_; }
  const Point& center() const { return center_; }
  double radius() const { return radius_; }
  double scale() const { return scale_; }
  const std::vector<double>& a() const { return a_; }
  const std::vector<double>& b() const { return b_; }

  CurvePoint evaluate(double t) const;
  Point position(double t) const;
  Point d1(double t) const;
  Point d2(double t) const;

  bool contains(const Point& p) const;
  // Distance to the curve, accurate to ~1e-10 after local refinement.
  double distance(const Point& p) const;
  double diameter() const;
  // Sampled at m equispaced parameters.
  std::vector<Point> sample(int m) const;

 private:
  ClosedCurve() = default;
  void validate() const;
  double rho(double t, int deriv) const;

  CurveKind kind_ = CurveKind::circle;
  Point center_ = Point::Zero();
  double radius_ = 1.0;
  double scale_ = 1.0;
  std::vector<double> a_, b_;
};

struct Arc {
  Point center;
  double radius;
  double theta0, theta1;

  Point point(double theta) const;
  Point normal(double theta) const;  // outward from the parent circle
  // n points equispaced in angle, endpoints included (n == 1 gives the midpoint).
  std::vector<double> angles(int n) const;
};

struct Disk {
  Point center;
  double radius;
  bool contains(const Point& p) const { return (p - center).norm() < radius; }
};

struct AdmissiblePair {
  Disk region;
  Arc arc;
};

AdmissiblePair make_admissible(double k, const Point& center, double radius, double theta0,
                               double theta1);

struct Nodes {
  int n = 0;
  std::vector<double> t;
  std::vector<Point> x, dx, ddx, normal;
  std::vector<double> speed;
};

Nodes quadrature_nodes(const ClosedCurve& curve, int n);

// No self-intersection of the m-gon through the samples.
bool is_simple(const ClosedCurve& curve, int m = 512);

// Symmetric Hausdorff distance between two curves on m samples each.
double hausdorff(const ClosedCurve& a, const ClosedCurve& b, int m = 256);

}  // namespace cavity
