#include "cavity/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cavity/parallel.hpp"

namespace cavity {

StarShapeParam StarShapeParam::circle(const Point& center, double radius, int q) {
  if (q < 0 || q > 8) throw config_error("invalid_shape", "star order q must lie in [0, 8]");
  StarShapeParam s;
  s.center = center;
  s.a.assign(q + 1, 0.0);
  s.b.assign(q, 0.0);
  s.a[0] = radius;
  return s;
}

StarShapeParam StarShapeParam::fit(const ClosedCurve& curve, const Point& center, int q, int m) {
  if (q < 0 || q > 8) throw config_error("invalid_shape", "star order q must lie in [0, 8]");
  // Radial function on a fine polar grid by bisection along each ray.
  RMat A(m, 2 * q + 1);
  RVec y(m);
  double rmax = curve.diameter() + (curve.position(0) - center).norm();
  for (int i = 0; i < m; ++i) {
    double th = 2 * kPi * i / m;
    Point dir(std::cos(th), std::sin(th));
    double lo = 0, hi = rmax;
    if (!curve.contains(center)) throw config_error("invalid_shape", "star center lies outside the curve");
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (lo + hi);
      (curve.contains(center + mid * dir) ? lo : hi) = mid;
    }
    y(i) = 0.5 * (lo + hi);
    A(i, 0) = 1;
    for (int j = 1; j <= q; ++j) {
      A(i, j) = std::cos(j * th);
      A(i, q + j) = std::sin(j * th);
    }
  }
  RVec c = A.colPivHouseholderQr().solve(y);
  StarShapeParam s = circle(center, 1.0, q);
  return s.with_coefficients(c);
}

RVec StarShapeParam::coefficients() const {
  RVec c(a.size() + b.size());
  for (size_t j = 0; j < a.size(); ++j) c(j) = a[j];
  for (size_t j = 0; j < b.size(); ++j) c(a.size() + j) = b[j];
  return c;
}

StarShapeParam StarShapeParam::with_coefficients(const RVec& c) const {
  if (size_t(c.size()) != a.size() + b.size())
    throw config_error("invalid_shape", "coefficient vector has the wrong length");
  StarShapeParam s = *this;
  for (size_t j = 0; j < a.size(); ++j) s.a[j] = c(j);
  for (size_t j = 0; j < b.size(); ++j) s.b[j] = c(a.size() + j);
  return s;
}

ClosedCurve StarShapeParam::curve() const {
  if (a.empty() || a.size() != b.size() + 1 || b.size() > 8)
    throw config_error("invalid_shape", "star shape needs a0..aq and b1..bq with q <= 8");
  return ClosedCurve::star(center, a, b);
}

CMat simulate(const ScatteringConfig& cfg, const MeasurementGrid& grid) {
  return Solver(cfg).total_fields(grid.receivers, grid.sources);
}

std::string shape_problem(const ClosedCurve& curve, const InversionData& data) {
  if (!is_simple(curve)) return "curve self-intersects";
  const double clear = 1e-3 * curve.diameter();
  auto inside = [&](const Point& p, double extra) { return curve.contains(p) && curve.distance(p) > clear + extra; };
  if (data.base.ball) {
    const ReferenceBall& b = *data.base.ball;
    if (!curve.contains(b.center) || curve.distance(b.center) <= b.radius + clear) return "ball not enclosed";
  }
  for (const Point& p : data.grid.receivers)
    if (!inside(p, 0)) return "receiver outside the cavity";
  for (const Point& p : data.grid.sources)
    if (!inside(p, 0)) return "source outside the cavity";
  return {};
}

namespace {

BoolMat effective_mask(const InversionData& d) {
  if (d.mask.size() == 0) return BoolMat::Constant(d.field.rows(), d.field.cols(), true);
  return d.mask;
}

class Problem {
 public:
  Problem(const InversionData& d, const StarShapeParam& init, const BoundaryCondition& bc, bool lam)
      : d_(d), init_(init), bc_(bc), lam_(lam), mask_(effective_mask(d)) {
    if (d.field.rows() != d.grid.n_receivers() || d.field.cols() != d.grid.n_sources())
      throw config_error("shape_mismatch", "field does not match the grid");
    norm2_ = 0;
    for (Eigen::Index i = 0; i < mask_.rows(); ++i)
      for (Eigen::Index j = 0; j < mask_.cols(); ++j)
        if (mask_(i, j)) norm2_ += std::norm(d.field(i, j)), ++count_;
    if (!(norm2_ > 0)) throw numerical_error("degenerate_data", "data field vanishes on the mask");
  }

  int ncoef() const { return int(init_.coefficients().size()); }

  StarShapeParam shape(const RVec& p) const { return init_.with_coefficients(p.head(ncoef())); }
  BoundaryCondition bc(const RVec& p) const {
    return lam_ ? BoundaryCondition::impedance(std::pow(10.0, p(ncoef()))) : bc_;
  }

  // Scaled residual, or nothing for an invalid or unsolvable shape.
  std::optional<RVec> residual(const RVec& p) const {
    ScatteringConfig cfg = d_.base;
    cfg.bc = bc(p);
    try {
      cfg.cavity = shape(p).curve();
      if (!shape_problem(cfg.cavity, d_).empty()) return std::nullopt;
      CMat U = simulate(cfg, d_.grid);
      RVec r(2 * count_);
      int q = 0;
      double s = 1 / std::sqrt(norm2_);
      for (Eigen::Index i = 0; i < mask_.rows(); ++i)
        for (Eigen::Index j = 0; j < mask_.cols(); ++j)
          if (mask_(i, j)) {
            cplx e = (U(i, j) - d_.field(i, j)) * s;
            r(q++) = e.real();
            r(q++) = e.imag();
          }
      return r;
    } catch (const Error&) {
      return std::nullopt;
    }
  }

 private:
  const InversionData& d_;
  StarShapeParam init_;
  BoundaryCondition bc_;
  bool lam_;
  BoolMat mask_;
  double norm2_ = 0;
  int count_ = 0;
};

}  // namespace

double misfit(const StarShapeParam& shape, const BoundaryCondition& bc, const InversionData& data) {
  ScatteringConfig cfg = data.base;
  cfg.cavity = shape.curve();
  cfg.bc = bc;
  std::string why = shape_problem(cfg.cavity, data);
  if (!why.empty()) throw config_error("invalid_shape", why);
  CMat U = simulate(cfg, data.grid);
  BoolMat mask = effective_mask(data);
  double num = 0, den = 0;
  for (Eigen::Index i = 0; i < U.rows(); ++i)
    for (Eigen::Index j = 0; j < U.cols(); ++j)
      if (mask(i, j)) num += std::norm(U(i, j) - data.field(i, j)), den += std::norm(data.field(i, j));
  if (!(den > 0)) throw numerical_error("degenerate_data", "data field vanishes on the mask");
  return num / den;
}

namespace {

CavityEstimate run_gauss_newton(const InversionData& data, const StarShapeParam& initial,
                                const BoundaryCondition& bc, const ReconstructOptions& opt, double log_lambda0) {
  const bool lam = opt.estimate_lambda;
  Problem prob(data, initial, bc, lam);
  const int nc = prob.ncoef(), np = nc + (lam ? 1 : 0);
  RVec p0(np);
  p0.head(nc) = initial.coefficients();
  if (lam) p0(nc) = log_lambda0;

  CavityEstimate est;
  est.bc = lam ? BcKind::impedance : bc.kind;
  auto finish = [&](const RVec& p, double m, const std::string& status) {
    est.shape = prob.shape(p);
    est.misfit = m;
    est.status = status;
    if (lam) {
      est.lambda = std::pow(10.0, p(nc));
      est.lambda_at_bound = p(nc) <= opt.log_lambda_min + 1e-6 || p(nc) >= opt.log_lambda_max - 1e-6;
    } else if (bc.kind == BcKind::impedance) {
      est.lambda = bc.c0.real();
    }
    return est;
  };

  std::string why = shape_problem(initial.curve(), data);
  if (!why.empty()) throw config_error("invalid_shape", "initial shape invalid: " + why);
  std::optional<RVec> r = prob.residual(p0);
  if (!r) throw numerical_error("forward_failed", "forward solve failed at the initial shape");
  double m = r->squaredNorm();
  est.initial_misfit = m;
  est.trace.push_back({0, m, m, 0});
  if (std::isinf(opt.alpha)) return finish(p0, m, "frozen");
  const double alpha = opt.alpha < 0 ? 1e-6 * m : opt.alpha;

  RVec p = p0;
  double f = m;
  std::string status = "max_iter";
  for (int it = 1; it <= opt.max_iter; ++it) {
    if (m < 1e-28) {
      status = "converged";
      break;
    }
    // Forward-difference Jacobian, one column per coefficient in parallel.
    RMat J(r->size(), np);
    std::vector<std::string> fail(np);
    parallel_for(np, [&](int k) {
      for (double h : {opt.fd_step, -opt.fd_step}) {
        RVec q = p;
        q(k) += h;
        if (auto rq = prob.residual(q)) {
          J.col(k) = (*rq - *r) / h;
          return;
        }
      }
      fail[k] = "no valid perturbation";
    });
    for (int k = 0; k < np; ++k)
      if (!fail[k].empty()) return finish(p, m, "line_search_failed");

    RVec grad = J.transpose() * *r + alpha * (p - p0);
    RMat H = J.transpose() * J;
    H.diagonal().array() += alpha;
    RVec dp = H.ldlt().solve(-grad);
    if (!dp.allFinite()) dp = -grad;

    double t = 1;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
      RVec q = p + t * dp;
      if (lam) q(nc) = std::clamp(q(nc), opt.log_lambda_min, opt.log_lambda_max);
      auto rq = prob.residual(q);
      if (!rq) continue;  // invalid intermediate shape: halve
      double mq = rq->squaredNorm();
      double fq = mq + alpha * (q - p0).squaredNorm();
      if (fq <= f + 1e-4 * t * grad.dot(dp) && fq < f) {
        double rel = (f - fq) / std::max(f, 1e-300);
        p = q;
        r = rq;
        m = mq;
        f = fq;
        est.trace.push_back({it, m, f, t});
        est.iterations = it;
        accepted = true;
        if (rel < opt.rel_tol) status = "converged";
        break;
      }
    }
    if (!accepted) {
      // A stalled search at round-off level is convergence, not failure.
      status = m < 1e-20 ? "converged" : "line_search_failed";
      break;
    }
    if (status == "converged") break;
  }
  return finish(p, m, status);
}

}  // namespace

CavityEstimate reconstruct(const InversionData& data, const StarShapeParam& initial, const BoundaryCondition& bc,
                           const ReconstructOptions& opt) {
  if (initial.order() > 8) throw config_error("invalid_shape", "star order q must not exceed 8");
  if (opt.max_iter < 0) throw config_error("invalid_option", "max_iter must be nonnegative");
  if (!(opt.fd_step > 0)) throw config_error("invalid_option", "finite-difference step must be positive");
  double l0 = 0;
  if (opt.estimate_lambda && bc.kind == BcKind::impedance && bc.c0.real() > 0)
    l0 = std::clamp(std::log10(bc.c0.real()), opt.log_lambda_min, opt.log_lambda_max);
  if (!opt.continuation || initial.order() == 0 || std::isinf(opt.alpha))
    return run_gauss_newton(data, initial, bc, opt, l0);

  // Low orders first; higher coefficients start from the initial guess.
  const int q = initial.order();
  StarShapeParam cur = initial;
  cur.a.resize(1);
  cur.b.clear();
  CavityEstimate est;
  double first_misfit = -1;
  int iters = 0;
  std::vector<IterationRecord> trace;
  for (int qq = 0; qq <= q; ++qq) {
    StarShapeParam s = cur;
    s.a.resize(qq + 1);
    s.b.resize(qq);
    for (int j = int(cur.b.size()) + 1; j <= qq; ++j) {
      s.a[j] = initial.a[j];
      s.b[j - 1] = initial.b[j - 1];
    }
    BoundaryCondition b = bc;
    if (opt.estimate_lambda && qq > 0) b = BoundaryCondition::impedance(est.lambda);
    double l = opt.estimate_lambda && qq > 0 ? std::log10(est.lambda) : l0;
    // Intermediate orders only need a rough seed for the next one.
    ReconstructOptions so = opt;
    if (qq < q) {
      so.max_iter = std::min(opt.max_iter, 8);
      so.rel_tol = std::max(opt.rel_tol, 1e-3);
    }
    est = run_gauss_newton(data, s, b, so, l);
    if (first_misfit < 0) first_misfit = est.initial_misfit;
    for (IterationRecord r : est.trace) {
      if (r.iter == 0 && !trace.empty()) continue;
      r.iter += iters;
      trace.push_back(r);
    }
    iters += est.iterations;
    cur = est.shape;
  }
  est.initial_misfit = first_misfit;
  est.iterations = iters;
  est.trace = trace;
  return est;
}

BcClassification classify_bc(const InversionData& data, const StarShapeParam& initial,
                             const ReconstructOptions& opt) {
  BcClassification out;
  ReconstructOptions o = opt;
  o.estimate_lambda = false;
  out.sound_soft = reconstruct(data, initial, BoundaryCondition::dirichlet(), o);

  // Coarse scan of the impedance constant at the initial shape.
  const int nscan = 17;
  std::vector<double> scan(nscan);
  parallel_for(nscan, [&](int i) {
    double ll = opt.log_lambda_min + (opt.log_lambda_max - opt.log_lambda_min) * i / (nscan - 1);
    try {
      scan[i] = misfit(initial, BoundaryCondition::impedance(std::pow(10.0, ll)), data);
    } catch (const Error&) {
      scan[i] = std::numeric_limits<double>::infinity();
    }
  });
  int best = int(std::min_element(scan.begin(), scan.end()) - scan.begin());
  double ll = opt.log_lambda_min + (opt.log_lambda_max - opt.log_lambda_min) * best / (nscan - 1);
  o.estimate_lambda = true;
  out.impedance = reconstruct(data, initial, BoundaryCondition::impedance(std::pow(10.0, ll)), o);
  out.lambda = out.impedance.lambda;
  out.lambda_below_resolution = out.impedance.lambda_at_bound && std::log10(out.lambda) < 0;

  double ms = out.sound_soft.misfit, mi = out.impedance.misfit;
  out.margin = std::max(ms, mi) / std::max(std::min(ms, mi), 1e-300);
  if (out.margin < 1.5)
    out.status = "inconclusive";
  else
    out.status = ms < mi ? "sound_soft" : "impedance";
  return out;
}

}  // namespace cavity
