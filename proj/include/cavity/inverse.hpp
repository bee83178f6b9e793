#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cavity/common.hpp"
#include "cavity/forward.hpp"
#include "cavity/measurement.hpp"
#include "cavity/retrieval.hpp"

namespace cavity {

// rho(t) = a0 + sum_{j=1..q} a_j cos jt + b_j sin jt about center, q <= 8.
struct StarShapeParam {
  Point center = Point::Zero();
  std::vector<double> a{1.0};
  std::vector<double> b;

  static StarShapeParam circle(const Point& center, double radius, int q = 0);
  // Least-squares trig fit of the radial function of a curve star-shaped about center.
  static StarShapeParam fit(const ClosedCurve& curve, const Point& center, int q, int m = 256);

  int order() const { return int(b.size()); }
  RVec coefficients() const;  // [a0..aq, b1..bq]
  StarShapeParam with_coefficients(const RVec& c) const;
  ClosedCurve curve() const;  // throws config_error when rho <= 0 somewhere
};

// Fixed part of the inverse problem: everything except the cavity and its BC.
struct InversionData {
  ScatteringConfig base;  // k, ball, node counts; cavity and bc are replaced
  MeasurementGrid grid;
  CMat field;             // total field u(x_i, z_j) on the grid
  BoolMat mask;           // entries used; all true when empty
};

// u(x_i, z_j) for every receiver/source pair, graze sources ignored.
CMat simulate(const ScatteringConfig& cfg, const MeasurementGrid& grid);

// Valid iff the curve is simple, encloses the ball and every grid point with
// 1e-3 diam clearance. Returns an empty string when valid, else the reason.
std::string shape_problem(const ClosedCurve& curve, const InversionData& data);

// sum |u_sim - u|^2 / sum |u|^2 over masked entries.
double misfit(const StarShapeParam& shape, const BoundaryCondition& bc, const InversionData& data);

struct IterationRecord {
  int iter = 0;
  double misfit = 0;
  double objective = 0;
  double step = 0;  // accepted line-search fraction
};

struct ReconstructOptions {
  double alpha = -1;  // Tikhonov weight; negative means 1e-6 * initial misfit, inf freezes
  int max_iter = 30;
  double fd_step = 1e-4;
  double rel_tol = 1e-8;
  bool estimate_lambda = false;  // impedance: log10 lambda joins the unknowns
  double log_lambda_min = -2, log_lambda_max = 2;
  bool continuation = false;  // fit orders 0..q in turn, each seeded by the last
};

struct CavityEstimate {
  StarShapeParam shape;
  BcKind bc = BcKind::sound_soft;
  double lambda = 0;  // impedance estimate
  bool lambda_at_bound = false;
  double misfit = 0;
  double initial_misfit = 0;
  int iterations = 0;
  std::string status;  // converged | max_iter | line_search_failed | frozen
  std::vector<IterationRecord> trace;
};

// Gauss-Newton with forward-difference Jacobian and Armijo backtracking.
CavityEstimate reconstruct(const InversionData& data, const StarShapeParam& initial,
                           const BoundaryCondition& bc, const ReconstructOptions& opt = {});

struct BcClassification {
  std::string status;  // sound_soft | impedance | inconclusive
  double margin = 0;   // worse misfit / better misfit
  double lambda = 0;
  bool lambda_below_resolution = false;
  CavityEstimate sound_soft, impedance;
  const CavityEstimate& best() const { return status == "impedance" ? impedance : sound_soft; }
};

// Runs reconstruct under both hypotheses. The impedance constant is first
// scanned over log10 lambda in [-2, 2] at the initial shape, then refined jointly.
BcClassification classify_bc(const InversionData& data, const StarShapeParam& initial,
                             const ReconstructOptions& opt = {});

}  // namespace cavity
