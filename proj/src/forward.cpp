#include "cavity/forward.hpp"

#include <algorithm>
#include <cmath>

#include "cavity/parallel.hpp"
#include "cavity/special.hpp"

namespace cavity {

cplx BoundaryCondition::lambda(double t) const {
  cplx v = c0;
  for (size_t j = 0; j < cos_coef.size(); ++j) v += cos_coef[j] * std::cos(double(j + 1) * t);
  for (size_t j = 0; j < sin_coef.size(); ++j) v += sin_coef[j] * std::sin(double(j + 1) * t);
  return v;
}

void validate(const ScatteringConfig& cfg) {
  if (!(cfg.k > 0) || !std::isfinite(cfg.k)) throw config_error("invalid_wavenumber", "k must be positive");
  if (cfg.n_D < 32 || cfg.n_D % 2) throw config_error("invalid_nodes", "n_D must be even and >= 32");
  if (cfg.ball) {
    const ReferenceBall& b = *cfg.ball;
    if (cfg.n_B < 32 || cfg.n_B % 2) throw config_error("invalid_nodes", "n_B must be even and >= 32");
    if (!(b.lambda0 > 0) || !std::isfinite(b.lambda0))
      throw config_error("invalid_ball", "ball impedance lambda0 must be positive");
    if (!(b.radius > 0) || !std::isfinite(b.radius))
      throw config_error("invalid_ball", "ball radius must be positive");
    if (!cfg.cavity.contains(b.center) ||
        cfg.cavity.distance(b.center) <= b.radius * (1 + 1e-9) + 1e-3 * cfg.cavity.diameter())
      throw config_error("geometry_intersect", "reference ball is not inside the cavity with clearance");
  }
  if (cfg.bc.kind == BcKind::impedance) {
    for (int i = 0; i < cfg.n_D; ++i) {
      cplx l = cfg.bc.lambda(2 * kPi * i / cfg.n_D);
      if (!std::isfinite(l.real()) || !std::isfinite(l.imag()))
        throw config_error("invalid_bc", "non-finite impedance");
      if (l.imag() < 0) throw config_error("invalid_bc", "impedance must satisfy Im lambda >= 0");
    }
  }
}

namespace {

std::shared_ptr<const Discretization> discretize(const ScatteringConfig& cfg) {
  validate(cfg);
  auto d = std::make_shared<Discretization>();
  d->cfg = cfg;
  d->D = quadrature_nodes(cfg.cavity, cfg.n_D);
  if (cfg.ball) d->B = quadrature_nodes(ClosedCurve::circle(cfg.ball->center, cfg.ball->radius), cfg.n_B);
  if (cfg.bc.kind == BcKind::impedance)
    for (double t : d->D.t) d->lambda.push_back(cfg.bc.lambda(t));
  d->diam = cfg.cavity.diameter();
  return d;
}

// R_j(t_i) for the periodic log weight, indexed by (i - j) mod n.
std::vector<double> kress_weights(int n) {
  int N = n / 2;
  std::vector<double> w(n);
  for (int d = 0; d < n; ++d) {
    double t = 2 * kPi * d / n, s = 0;
    for (int m = 1; m < N; ++m) s += std::cos(m * t) / m;
    w[d] = -(2 * kPi / N) * s - kPi / (double(N) * N) * std::cos(N * t);
  }
  return w;
}

double log_sin2(double t, double tau) {
  double s = std::sin(0.5 * (t - tau));
  return std::log(4 * s * s);
}

// Single-layer operator on one curve with the logarithmic split.
CMat single_layer_self(double k, const Nodes& q) {
  int n = q.n;
  auto R = kress_weights(n);
  CMat S(n, n);
  const double h = 2 * kPi / n;
  parallel_for(n, [&](int i) {
    for (int j = 0; j < n; ++j) {
      double Rij = R[((i - j) % n + n) % n];
      cplx L1, L2;
      if (i == j) {
        L1 = -1 / (4 * kPi);
        L2 = 0.25 * kI - (kEulerGamma + std::log(k / 2)) / (2 * kPi) - std::log(q.speed[i]) / (2 * kPi);
      } else {
        double r = (q.x[i] - q.x[j]).norm();
        cplx phi = 0.25 * kI * hankel1(0, k * r);
        L1 = -bessel_j(0, k * r) / (4 * kPi);
        L2 = phi - L1 * log_sin2(q.t[i], q.t[j]);
      }
      S(i, j) = (Rij * L1 + h * L2) * q.speed[j];
    }
  });
  return S;
}

// Normal derivative (at the target) of the single layer, principal value part.
CMat adjoint_double_layer_self(double k, const Nodes& q) {
  int n = q.n;
  auto R = kress_weights(n);
  CMat K(n, n);
  const double h = 2 * kPi / n;
  parallel_for(n, [&](int i) {
    for (int j = 0; j < n; ++j) {
      cplx M1, M2;
      if (i == j) {
        const Point &d = q.dx[i], &dd = q.ddx[i];
        M1 = 0;
        M2 = (d.y() * dd.x() - d.x() * dd.y()) / (4 * kPi * std::pow(q.speed[i], 3));
      } else {
        Point dxy = q.x[i] - q.x[j];
        double r = dxy.norm(), nd = q.normal[i].dot(dxy) / r;
        cplx full = -0.25 * kI * k * hankel1(1, k * r) * nd;
        M1 = k / (4 * kPi) * bessel_j(1, k * r) * nd;
        M2 = full - M1 * log_sin2(q.t[i], q.t[j]);
      }
      K(i, j) = (R[((i - j) % n + n) % n] * M1 + h * M2) * q.speed[j];
    }
  });
  return K;
}

// Cross blocks between disjoint curves: trapezoidal rule.
void cross_blocks(double k, const Nodes& tgt, const Nodes& src, CMat& S, CMat& dS) {
  S.resize(tgt.n, src.n);
  dS.resize(tgt.n, src.n);
  const double h = 2 * kPi / src.n;
  parallel_for(tgt.n, [&](int i) {
    for (int j = 0; j < src.n; ++j) {
      Point dxy = tgt.x[i] - src.x[j];
      double r = dxy.norm(), w = h * src.speed[j];
      S(i, j) = 0.25 * kI * hankel1(0, k * r) * w;
      dS(i, j) = -0.25 * kI * k * hankel1(1, k * r) * (tgt.normal[i].dot(dxy) / r) * w;
    }
  });
}

double node_spacing(const Nodes& q) {
  double s = 0;
  for (double v : q.speed) s = std::max(s, v);
  return s * 2 * kPi / q.n;
}

void check_source(const Discretization& d, const Point& z, bool graze) {
  const ScatteringConfig& c = d.cfg;
  double floor = (graze ? 1e-6 : 1e-3) * d.diam;
  if (!c.cavity.contains(z) || c.cavity.distance(z) <= floor)
    throw config_error("source_outside", "source must lie inside the cavity away from its boundary");
  if (c.ball) {
    double db = (z - c.ball->center).norm() - c.ball->radius;
    if (db <= floor) throw config_error("source_in_ball", "source must lie outside the reference ball");
  }
}

void check_eval(const Discretization& d, const Point& x) {
  const ScatteringConfig& c = d.cfg;
  if (!c.cavity.contains(x)) throw config_error("eval_outside", "evaluation point outside the cavity");
  if (c.ball && (x - c.ball->center).norm() <= c.ball->radius)
    throw config_error("eval_in_ball", "evaluation point inside the reference ball");
  if (c.cavity.distance(x) < 2 * node_spacing(d.D) ||
      (c.ball && (x - c.ball->center).norm() - c.ball->radius < 2 * node_spacing(d.B)))
    throw numerical_error("near_boundary", "evaluation point too close to a boundary for the quadrature");
}

CVec rhs(const Discretization& d, const Point& z) {
  const ScatteringConfig& c = d.cfg;
  int nD = d.D.n, nB = c.ball ? d.B.n : 0;
  CVec f(nD + nB);
  for (int i = 0; i < nD; ++i) {
    cplx ui = fundamental_2d(c.k, d.D.x[i], z);
    if (c.bc.kind == BcKind::sound_soft) {
      f(i) = -ui;
    } else {
      auto g = grad_fundamental_2d(c.k, d.D.x[i], z);
      f(i) = -(g[0] * d.D.normal[i].x() + g[1] * d.D.normal[i].y() + d.lambda[i] * ui);
    }
  }
  for (int i = 0; i < nB; ++i) {
    cplx ui = fundamental_2d(c.k, d.B.x[i], z);
    auto g = grad_fundamental_2d(c.k, d.B.x[i], z);
    f(nD + i) = -(g[0] * d.B.normal[i].x() + g[1] * d.B.normal[i].y() + kI * c.ball->lambda0 * ui);
  }
  return f;
}

}  // namespace

CMat assemble(const Discretization& d) {
  const ScatteringConfig& c = d.cfg;
  const double k = c.k;
  int nD = d.D.n, nB = c.ball ? d.B.n : 0;
  CMat A(nD + nB, nD + nB);
  CMat SDD = single_layer_self(k, d.D);
  if (c.bc.kind == BcKind::sound_soft) {
    A.topLeftCorner(nD, nD) = SDD;
  } else {
    CMat KDD = adjoint_double_layer_self(k, d.D);
    for (int i = 0; i < nD; ++i) KDD.row(i) += d.lambda[i] * SDD.row(i);
    KDD.diagonal().array() += 0.5;
    A.topLeftCorner(nD, nD) = KDD;
  }
  if (nB == 0) return A;

  CMat SDB, dSDB, SBD, dSBD;
  cross_blocks(k, d.D, d.B, SDB, dSDB);
  cross_blocks(k, d.B, d.D, SBD, dSBD);
  if (c.bc.kind == BcKind::sound_soft) {
    A.topRightCorner(nD, nB) = SDB;
  } else {
    for (int i = 0; i < nD; ++i) dSDB.row(i) += d.lambda[i] * SDB.row(i);
    A.topRightCorner(nD, nB) = dSDB;
  }
  const cplx il0 = kI * c.ball->lambda0;
  A.bottomLeftCorner(nB, nD) = dSBD + il0 * SBD;
  CMat KBB = adjoint_double_layer_self(k, d.B) + il0 * single_layer_self(k, d.B);
  KBB.diagonal().array() -= 0.5;
  A.bottomRightCorner(nB, nB) = KBB;
  for (Eigen::Index i = 0; i < A.size(); ++i)
    if (!std::isfinite(A.data()[i].real()) || !std::isfinite(A.data()[i].imag()))
      throw numerical_error("assembly", "non-finite matrix entry");
  return A;
}

CMat assemble(const ScatteringConfig& cfg) { return assemble(*discretize(cfg)); }

Solver::Solver(const ScatteringConfig& cfg) : disc_(discretize(cfg)) {
  A_ = assemble(*disc_);
  lu_.compute(A_);
  double rc = lu_.rcond();
  condition_ = rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  if (!(condition_ < 1e12))
    throw numerical_error("resonance",
                          "boundary integral system is singular (condition estimate " +
                              std::to_string(condition_) +
                              "); use a different k or a combined single+double layer on the cavity");
}

DensitySolution Solver::solve(const Point& z, bool graze) const {
  check_source(*disc_, z, graze);
  CVec f = rhs(*disc_, z);
  CVec x = lu_.solve(f);
  CVec r = f - A_ * x;
  x += lu_.solve(r);
  r = f - A_ * x;
  DensitySolution s;
  s.disc = disc_;
  s.z = z;
  int nD = disc_->D.n;
  s.phi = x.head(nD);
  s.psi = x.tail(x.size() - nD);
  double fn = f.norm();
  s.residual = fn > 0 ? r.norm() / fn : r.norm();
  s.condition = condition_;
  return s;
}

CMat Solver::total_fields(const std::vector<Point>& x, const std::vector<Point>& z, bool graze) const {
  const Discretization& d = *disc_;
  const int nx = int(x.size()), nz = int(z.size()), nD = d.D.n, nB = d.cfg.ball ? d.B.n : 0;
  const double k = d.cfg.k;
  for (const Point& p : x) check_eval(d, p);
  CMat F(nD + nB, nz);
  for (int j = 0; j < nz; ++j) {
    check_source(d, z[j], graze);
    F.col(j) = rhs(d, z[j]);
  }
  CMat X = lu_.solve(F);
  X += lu_.solve(F - A_ * X);
  CMat E(nx, nD + nB);
  for (int i = 0; i < nx; ++i) {
    double h = 2 * kPi / nD;
    for (int q = 0; q < nD; ++q) E(i, q) = 0.25 * kI * hankel1(0, k * (x[i] - d.D.x[q]).norm()) * (h * d.D.speed[q]);
    h = nB ? 2 * kPi / nB : 0;
    for (int q = 0; q < nB; ++q)
      E(i, nD + q) = 0.25 * kI * hankel1(0, k * (x[i] - d.B.x[q]).norm()) * (h * d.B.speed[q]);
  }
  CMat U = E * X;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nz; ++j) U(i, j) += fundamental_2d(k, x[i], z[j]);
  return U;
}

DensitySolution solve_scatter(const ScatteringConfig& cfg, const Point& z) { return Solver(cfg).solve(z); }

cplx scattered_field(const DensitySolution& sol, const Point& x) {
  const Discretization& d = *sol.disc;
  check_eval(d, x);
  const double k = d.cfg.k;
  cplx v = 0;
  double h = 2 * kPi / d.D.n;
  for (int j = 0; j < d.D.n; ++j) v += 0.25 * kI * hankel1(0, k * (x - d.D.x[j]).norm()) * (h * d.D.speed[j]) * sol.phi(j);
  if (d.cfg.ball) {
    h = 2 * kPi / d.B.n;
    for (int j = 0; j < d.B.n; ++j)
      v += 0.25 * kI * hankel1(0, k * (x - d.B.x[j]).norm()) * (h * d.B.speed[j]) * sol.psi(j);
  }
  return v;
}

cplx total_field(const DensitySolution& sol, const Point& x) {
  return scattered_field(sol, x) + fundamental_2d(sol.disc->cfg.k, x, sol.z);
}

namespace {

double kress_weight_at(int n, double s) {
  int N = n / 2;
  double v = 0;
  for (int m = 1; m < N; ++m) v += std::cos(m * s) / m;
  return -(2 * kPi / N) * v - kPi / (double(N) * N) * std::cos(N * s);
}

cplx trig_interp(const CVec& f, double t) {
  int n = int(f.size()), N = n / 2;
  cplx v = 0;
  for (int j = 0; j < n; ++j) {
    double s = t - 2 * kPi * j / n, w = 1 + std::cos(N * s);
    for (int m = 1; m < N; ++m) w += 2 * std::cos(m * s);
    v += f(j) * (w / n);
  }
  return v;
}

// Single layer and its normal derivative at parameter t of the curve q carrying dens.
std::pair<cplx, cplx> self_trace(double k, const ClosedCurve& curve, const Nodes& q, const CVec& dens,
                                 double t) {
  CurvePoint p = curve.evaluate(t);
  Point dd = curve.d2(t), d = curve.d1(t);
  const double h = 2 * kPi / q.n;
  cplx v = 0, dv = 0;
  for (int j = 0; j < q.n; ++j) {
    double s = t - q.t[j], R = kress_weight_at(q.n, s);
    Point dxy = p.x - q.x[j];
    double r = dxy.norm();
    cplx L1, L2, M1, M2;
    if (r < 1e-14 * (1 + p.x.norm())) {
      L1 = -1 / (4 * kPi);
      L2 = 0.25 * kI - (kEulerGamma + std::log(k / 2)) / (2 * kPi) - std::log(p.speed) / (2 * kPi);
      M1 = 0;
      M2 = (d.y() * dd.x() - d.x() * dd.y()) / (4 * kPi * std::pow(p.speed, 3));
    } else {
      double ls = log_sin2(t, q.t[j]), nd = p.normal.dot(dxy) / r;
      L1 = -bessel_j(0, k * r) / (4 * kPi);
      L2 = 0.25 * kI * hankel1(0, k * r) - L1 * ls;
      M1 = k / (4 * kPi) * bessel_j(1, k * r) * nd;
      M2 = -0.25 * kI * k * hankel1(1, k * r) * nd - M1 * ls;
    }
    v += (R * L1 + h * L2) * q.speed[j] * dens(j);
    dv += (R * M1 + h * M2) * q.speed[j] * dens(j);
  }
  return {v, dv};
}

std::pair<cplx, cplx> cross_trace(double k, const CurvePoint& p, const Nodes& q, const CVec& dens) {
  const double h = 2 * kPi / q.n;
  cplx v = 0, dv = 0;
  for (int j = 0; j < q.n; ++j) {
    Point dxy = p.x - q.x[j];
    double r = dxy.norm(), w = h * q.speed[j];
    v += 0.25 * kI * hankel1(0, k * r) * w * dens(j);
    dv += -0.25 * kI * k * hankel1(1, k * r) * (p.normal.dot(dxy) / r) * w * dens(j);
  }
  return {v, dv};
}

}  // namespace

BoundaryTrace scattered_trace_D(const DensitySolution& sol, double t) {
  const Discretization& d = *sol.disc;
  const ClosedCurve& curve = d.cfg.cavity;
  auto [v, dv] = self_trace(d.cfg.k, curve, d.D, sol.phi, t);
  dv += 0.5 * trig_interp(sol.phi, t);
  if (d.cfg.ball) {
    auto [cv, cdv] = cross_trace(d.cfg.k, curve.evaluate(t), d.B, sol.psi);
    v += cv;
    dv += cdv;
  }
  return {curve.evaluate(t).x, curve.evaluate(t).normal, v, dv};
}

BoundaryTrace scattered_trace_B(const DensitySolution& sol, double t) {
  const Discretization& d = *sol.disc;
  if (!d.cfg.ball) throw config_error("no_ball", "configuration has no reference ball");
  ClosedCurve curve = ClosedCurve::circle(d.cfg.ball->center, d.cfg.ball->radius);
  auto [v, dv] = self_trace(d.cfg.k, curve, d.B, sol.psi, t);
  dv -= 0.5 * trig_interp(sol.psi, t);
  auto [cv, cdv] = cross_trace(d.cfg.k, curve.evaluate(t), d.D, sol.phi);
  return {curve.evaluate(t).x, curve.evaluate(t).normal, v + cv, dv + cdv};
}

double reciprocity_residual(const Solver& solver, const Point& x, const Point& z) {
  if ((x - z).norm() == 0) throw config_error("coincident_points", "reciprocity requires x != z");
  cplx a = scattered_field(solver.solve(z), x);
  cplx b = scattered_field(solver.solve(x), z);
  return std::abs(a - b) / std::max(std::abs(a), 1e-300);
}

double reciprocity_residual(const ScatteringConfig& cfg, const Point& x, const Point& z) {
  return reciprocity_residual(Solver(cfg), x, z);
}

double condition_number(const ScatteringConfig& cfg) {
  CMat A = assemble(cfg);
  Eigen::JacobiSVD<CMat> svd(A);
  const auto& s = svd.singularValues();
  double smin = s(s.size() - 1);
  return smin > 0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

}  // namespace cavity
