#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "cavity/common.hpp"
#include "cavity/geometry.hpp"

namespace cavity {

enum class BcKind { sound_soft, impedance };

// lambda(t) = c0 + sum_j (cos_j cos jt + sin_j sin jt); Neumann is impedance with lambda = 0.
struct BoundaryCondition {
  BcKind kind = BcKind::sound_soft;
  cplx c0 = 0.0;
  std::vector<cplx> cos_coef, sin_coef;

  static BoundaryCondition dirichlet() { return {}; }
  static BoundaryCondition impedance(cplx lambda) { return {BcKind::impedance, lambda, {}, {}}; }
  cplx lambda(double t) const;
};

struct ReferenceBall {
  Point center = Point::Zero();
  double radius = 0.5;
  double lambda0 = 1.0;
};

struct ScatteringConfig {
  double k = 1.0;
  ClosedCurve cavity = ClosedCurve::circle(Point::Zero(), 2.0);
  BoundaryCondition bc;
  std::optional<ReferenceBall> ball = ReferenceBall{};
  int n_D = 128;
  int n_B = 64;
};

// Throws config errors on: k <= 0, odd or small node counts, ball not strictly
// inside the cavity with clearance, lambda0 <= 0, Im lambda < 0 at a node.
void validate(const ScatteringConfig& cfg);

struct Discretization {
  ScatteringConfig cfg;
  Nodes D, B;  // B empty without ball
  std::vector<cplx> lambda;  // lambda at D nodes (impedance only)
  double diam = 0;
};

struct DensitySolution {
  std::shared_ptr<const Discretization> disc;
  Point z;
  CVec phi, psi;
  double residual = 0;   // relative residual of the discrete system
  double condition = 0;  // 1-norm condition estimate
};

// Dense Nystrom matrix of size (n_D + n_B)^2 for the single-layer pair representation.
CMat assemble(const ScatteringConfig& cfg);
CMat assemble(const Discretization& disc);

// Factorized operator reusable across many sources; read-only after construction.
class Solver {
 public:
  explicit Solver(const ScatteringConfig& cfg);

  // graze: allow sources down to 1e-6 diam from the boundaries instead of 1e-3 diam.
  DensitySolution solve(const Point& z, bool graze = false) const;
  // Total field u(x_i, z_j) for every pair, all sources solved together.
  CMat total_fields(const std::vector<Point>& x, const std::vector<Point>& z, bool graze = false) const;
  double condition() const { return condition_; }
  const Discretization& disc() const { return *disc_; }
  const CMat& matrix() const { return A_; }

 private:
  std::shared_ptr<const Discretization> disc_;
  CMat A_;
  Eigen::PartialPivLU<CMat> lu_;
  double condition_ = 0;
};

DensitySolution solve_scatter(const ScatteringConfig& cfg, const Point& z);

cplx scattered_field(const DensitySolution& sol, const Point& x);
cplx total_field(const DensitySolution& sol, const Point& x);

struct BoundaryTrace {
  Point x, normal;
  cplx value, normal_derivative;
};

// Scattered-field trace at curve parameter t, taken from the propagation domain
// (interior side of the cavity, exterior side of the ball). t need not be a node.
BoundaryTrace scattered_trace_D(const DensitySolution& sol, double t);
BoundaryTrace scattered_trace_B(const DensitySolution& sol, double t);

// |us(x,z) - us(z,x)| / max(|us(x,z)|, eps)
double reciprocity_residual(const ScatteringConfig& cfg, const Point& x, const Point& z);
double reciprocity_residual(const Solver& solver, const Point& x, const Point& z);

// 2-norm condition number from the singular values.
double condition_number(const ScatteringConfig& cfg);

// Separation-of-variables solution for a disk cavity of radius R with a
// concentric ball at the origin. Returns the scattered field at x.
cplx concentric_oracle(double R, const BoundaryCondition& bc, const ReferenceBall& ball, double k,
                       const Point& z, const Point& x, int* order_used = nullptr);

}  // namespace cavity
