#include "cavity/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "cavity/special.hpp"

namespace cavity {

RMat cross_term(const PhaselessDataset& ds) {
  const Eigen::Index nr = ds.s.rows(), ns = ds.s.cols();
  if (ds.r.size() != nr || ds.t.rows() != nr || ds.t.cols() != ns)
    throw config_error("shape_mismatch", "dataset arrays have inconsistent shapes");
  RMat c(nr, ns);
  for (Eigen::Index i = 0; i < nr; ++i)
    for (Eigen::Index j = 0; j < ns; ++j)
      c(i, j) = 0.5 * (ds.t(i, j) * ds.t(i, j) - ds.r(i) * ds.r(i) - ds.s(i, j) * ds.s(i, j));
  return c;
}

RMat graze_cross_term(const PhaselessDataset& ds) {
  PhaselessDataset g;
  g.r = ds.r;
  g.s = ds.gs;
  g.t = ds.gt;
  return cross_term(g);
}

RMat PhaseDecomposition::abs_delta() const {
  RMat d(cos_delta.rows(), cos_delta.cols());
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j) d(i, j) = std::acos(std::clamp(cos_delta(i, j), -1.0, 1.0));
  return d;
}

namespace {

struct Cosines {
  RMat cos;
  BoolMat flagged;
};

Cosines cosines(const RVec& r, const RMat& s, const RMat& cross, const BoolMat& mask, double clamp_tol) {
  Cosines out{RMat::Zero(s.rows(), s.cols()), BoolMat::Constant(s.rows(), s.cols(), false)};
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (!mask(i, j)) continue;
      double c = cross(i, j) / (r(i) * s(i, j));
      if (std::abs(c) > 1) {
        if (std::abs(c) - 1 <= clamp_tol)
          c = std::copysign(1.0, c);
        else
          out.flagged(i, j) = true;
      }
      out.cos(i, j) = c;
    }
  return out;
}

double clamp_acos(double c) { return std::acos(std::clamp(c, -1.0, 1.0)); }

}  // namespace

PhaseDecomposition decompose(const PhaselessDataset& ds, double tau, double clamp_tol) {
  if (!(tau > 0)) throw config_error("invalid_tau", "mask threshold must be positive");
  PhaseDecomposition pd;
  pd.tau = tau;
  pd.clamp_tol = clamp_tol;
  pd.r = ds.r;
  pd.s = ds.s;
  pd.cross = cross_term(ds);
  const Eigen::Index nr = ds.s.rows(), ns = ds.s.cols();
  double mx = 0;
  for (Eigen::Index i = 0; i < nr; ++i)
    for (Eigen::Index j = 0; j < ns; ++j) mx = std::max(mx, ds.r(i) * ds.s(i, j));
  pd.mask = BoolMat::Constant(nr, ns, false);
  for (Eigen::Index i = 0; i < nr; ++i)
    for (Eigen::Index j = 0; j < ns; ++j) pd.mask(i, j) = mx > 0 && ds.r(i) * ds.s(i, j) > tau * mx;
  if (!pd.mask.any())
    throw numerical_error("degenerate_data", "no grid entry has nonvanishing r s; the fields vanish");
  Cosines c = cosines(pd.r, pd.s, pd.cross, pd.mask, clamp_tol);
  pd.cos_delta = c.cos;
  pd.flagged = c.flagged;
  return pd;
}

Eigen::MatrixXi continuity_signs(const RMat& C, const RMat& S, const BoolMat& mask) {
  const int nr = int(C.rows()), ns = int(C.cols());
  static const int dirs[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}};
  Eigen::MatrixXi sign = Eigen::MatrixXi::Zero(nr, ns);
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> done = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(nr, ns, false);
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> deferred = done;
  CMat W = CMat::Zero(nr, ns);
  auto inside = [&](int i, int j) { return i >= 0 && i < nr && j >= 0 && j < ns && mask(i, j); };

  // Max-heap on priority, ties broken by index for determinism.
  using Item = std::tuple<double, int, int>;
  auto cmp = [](const Item& a, const Item& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
    return std::make_pair(std::get<1>(a), std::get<2>(a)) > std::make_pair(std::get<1>(b), std::get<2>(b));
  };
  std::priority_queue<Item, std::vector<Item>, decltype(cmp)> heap(cmp);
  auto assign = [&](int i, int j, int sg) {
    sign(i, j) = sg;
    W(i, j) = cplx(C(i, j), sg * S(i, j));
    done(i, j) = true;
    for (auto& d : dirs) {
      int a = i + d[0], b = j + d[1];
      if (inside(a, b) && !done(a, b)) heap.emplace(S(a, b), a, b);
    }
  };

  for (;;) {
    // Seed each connected masked region at its best-conditioned entry.
    int si = -1, sj = -1;
    double best = -1;
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < ns; ++j)
        if (mask(i, j) && !done(i, j) && S(i, j) > best) best = S(i, j), si = i, sj = j;
    if (si < 0) break;
    assign(si, sj, +1);
    while (!heap.empty()) {
      auto [pr, i, j] = heap.top();
      heap.pop();
      if (done(i, j)) continue;
      double sc[2] = {0, 0}, sc1[2] = {0, 0};
      int n2 = 0;
      for (auto& d : dirs) {
        int i1 = i + d[0], j1 = j + d[1];
        if (!inside(i1, j1) || !done(i1, j1)) continue;
        int i2 = i1 + d[0], j2 = j1 + d[1];
        for (int k = 0; k < 2; ++k) {
          cplx cand(C(i, j), (k == 0 ? 1 : -1) * S(i, j));
          if (inside(i2, j2) && done(i2, j2))
            sc[k] += std::abs(cand - (2.0 * W(i1, j1) - W(i2, j2)));
          else
            sc1[k] += std::abs(cand - W(i1, j1));
        }
        if (inside(i2, j2) && done(i2, j2)) ++n2;
      }
      if (n2 == 0) {
        // Wait once for a neighbour pair that allows linear extrapolation.
        if (!deferred(i, j) && !heap.empty()) {
          deferred(i, j) = true;
          heap.emplace(pr * 1e-6, i, j);
          continue;
        }
        sc[0] = sc1[0];
        sc[1] = sc1[1];
      }
      assign(i, j, sc[0] <= sc[1] ? +1 : -1);
    }
  }
  return sign;
}

namespace {

// Per-receiver fit of u_l = Phi_l + a over graze levels for one sign pattern.
struct PatternFit {
  cplx e;
  double residual;
  CVec v;  // u_l e^{-i alpha}
};

PatternFit fit_pattern(const CVec& phi, const RVec& gs, const RVec& ad, unsigned pattern) {
  const int L = int(phi.size());
  CVec v(L);
  for (int l = 0; l < L; ++l) {
    double sg = (pattern >> l) & 1u ? -1.0 : 1.0;
    v(l) = gs(l) * std::exp(-kI * (sg * ad(l)));
  }
  CVec pv = v.array() - v.mean();
  CVec pp = phi.array() - phi.mean();
  cplx dot = pv.dot(pp);  // conj(pv) . pp
  cplx e = std::abs(dot) > 0 ? dot / std::abs(dot) : cplx(1.0);
  double res = (e * pv - pp).norm() / std::max(pp.norm(), 1e-300);
  return {e, res, v};
}

double phase_mismatch(const CVec& u, const CVec& phi) {
  double m = 0;
  for (Eigen::Index l = 0; l < u.size(); ++l) m += std::abs(std::arg(u(l) / phi(l)));
  return m / double(u.size());
}

}  // namespace

AnchorEstimate anchor_from_graze(const PhaselessDataset& ds, double clamp_tol) {
  const MeasurementGrid& g = ds.grid;
  if (!g.has_graze() || ds.gs.cols() == 0)
    throw numerical_error("anchor_unavailable", "dataset carries no graze data");
  const int nr = g.n_receivers(), L = g.n_levels();
  if (L < 2)
    throw numerical_error("anchor_unavailable",
                          "at least two graze levels are needed to separate Phi from the bounded part");
  if (L > 12) throw numerical_error("anchor_unavailable", "too many graze levels");
  RMat gc = graze_cross_term(ds);
  BoolMat all = BoolMat::Constant(nr, L, true);
  for (int i = 0; i < nr; ++i)
    for (int l = 0; l < L; ++l)
      if (!(ds.r(i) > 0) || !(ds.gs(i, l) > 0))
        throw numerical_error("anchor_unavailable", "vanishing modulus at a graze pair");
  Cosines c = cosines(ds.r, ds.gs, gc, all, clamp_tol);

  AnchorEstimate a;
  a.gamma.resize(nr);
  a.graze_sign.resize(nr, L);
  a.residual.resize(nr);
  a.passive_margin.resize(nr);
  a.graze_field.resize(nr, L);
  for (int i = 0; i < nr; ++i) {
    CVec phi(L);
    RVec gs(L), ad(L);
    for (int l = 0; l < L; ++l) {
      phi(l) = fundamental_2d(ds.k, g.receivers[i], g.graze[i][l]);
      gs(l) = ds.gs(i, l);
      ad(l) = clamp_acos(c.cos(i, l));
    }
    // Best pattern up to the mirror (all signs flipped), which fits equally well.
    unsigned best = 0;
    double best_res = std::numeric_limits<double>::max();
    const unsigned full = (1u << L) - 1;
    for (unsigned p = 0; p < (1u << (L - 1)); ++p) {
      double res = std::min(fit_pattern(phi, gs, ad, p).residual, fit_pattern(phi, gs, ad, p ^ full).residual);
      if (res < best_res - 1e-14) best_res = res, best = p;
    }
    PatternFit f1 = fit_pattern(phi, gs, ad, best), f2 = fit_pattern(phi, gs, ad, best ^ full);
    // Passive branch: the anchored graze phases must follow those of Phi.
    double m1 = phase_mismatch(f1.e * f1.v, phi), m2 = phase_mismatch(f2.e * f2.v, phi);
    const PatternFit& f = m1 <= m2 ? f1 : f2;
    unsigned pat = m1 <= m2 ? best : best ^ full;
    a.gamma(i) = f.e;
    a.residual(i) = f.residual;
    a.passive_margin(i) = std::abs(m1 - m2);
    for (int l = 0; l < L; ++l) {
      a.graze_sign(i, l) = (pat >> l) & 1u ? -1 : 1;
      a.graze_field(i, l) = f.e * f.v(l);
    }
  }
  return a;
}

std::pair<BranchCandidate, BranchCandidate> build_branches(const PhaseDecomposition& pd,
                                                            const Eigen::MatrixXi& sigma,
                                                            const CVec& anchor) {
  const Eigen::Index nr = pd.s.rows(), ns = pd.s.cols();
  if (anchor.size() != nr) throw config_error("shape_mismatch", "anchor length does not match receivers");
  BranchCandidate d;
  d.tag = Branch::direct;
  d.mask = pd.mask;
  d.gamma.resize(nr);
  d.field = CMat::Zero(nr, ns);
  RMat ad = pd.abs_delta();
  for (Eigen::Index i = 0; i < nr; ++i) {
    double m = std::abs(anchor(i));
    d.gamma(i) = m > 0 ? anchor(i) / m : cplx(1.0);
    for (Eigen::Index j = 0; j < ns; ++j)
      if (pd.mask(i, j)) d.field(i, j) = pd.s(i, j) * d.gamma(i) * std::exp(-kI * (sigma(i, j) * ad(i, j)));
  }
  BranchCandidate c = d;
  c.tag = Branch::conjugate;
  c.field = d.field.conjugate();
  c.gamma = d.gamma.conjugate();
  return {d, c};
}

double graze_phase_scale(const PhaselessDataset& ds) {
  const MeasurementGrid& g = ds.grid;
  if (!g.has_graze()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0;
  for (int i = 0; i < g.n_receivers(); ++i)
    for (int l = 0; l < g.n_levels(); ++l) s += std::abs(std::arg(fundamental_2d(ds.k, g.receivers[i], g.graze[i][l])));
  return s / (g.n_receivers() * g.n_levels());
}

double graze_score(const BranchCandidate& c, const PhaselessDataset& ds) {
  const MeasurementGrid& g = ds.grid;
  if (c.graze_field.size() == 0 || !g.has_graze()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0, ref = 0;
  for (int i = 0; i < g.n_receivers(); ++i)
    for (int l = 0; l < g.n_levels(); ++l) {
      cplx phi = fundamental_2d(ds.k, g.receivers[i], g.graze[i][l]);
      s += std::abs(std::arg(c.graze_field(i, l) / phi));
      ref += std::abs(std::arg(phi));
    }
  return s / std::max(ref, 1e-300);
}

std::string to_string(Selection s) {
  switch (s) {
    case Selection::direct: return "direct";
    case Selection::conjugate: return "conjugate";
    case Selection::undetermined: return "undetermined";
  }
  return "undetermined";
}

RetrievalReport select_branch(const BranchCandidate& a, const BranchCandidate& b,
                              const PhaselessDataset& ds, double noise_floor) {
  RetrievalReport rep;
  rep.noise_floor = noise_floor;
  const BranchCandidate& d = a.tag == Branch::direct ? a : b;
  const BranchCandidate& c = a.tag == Branch::direct ? b : a;
  rep.direct = d;
  rep.conjugate = c;
  rep.field = d.field;
  rep.score_direct = graze_score(d, ds);
  rep.score_conjugate = graze_score(c, ds);
  if (!std::isfinite(rep.score_direct) || !std::isfinite(rep.score_conjugate)) {
    rep.selected = Selection::undetermined;
    rep.status = "undetermined: no graze data to test the candidates";
    return rep;
  }
  rep.margin = std::abs(rep.score_direct - rep.score_conjugate);
  rep.phase_gap = rep.margin * graze_phase_scale(ds);
  if (rep.margin < 10 * noise_floor) {
    rep.selected = Selection::undetermined;
    rep.status = "undetermined: branch margin below ten times the noise floor";
    return rep;
  }
  rep.selected = rep.score_direct <= rep.score_conjugate ? Selection::direct : Selection::conjugate;
  rep.field = rep.selected == Selection::direct ? d.field : c.field;
  rep.status = "selected";
  return rep;
}

double field_error(const CMat& estimate, const CMat& truth, const BoolMat& mask) {
  double num = 0, den = 0;
  for (Eigen::Index i = 0; i < truth.rows(); ++i)
    for (Eigen::Index j = 0; j < truth.cols(); ++j) {
      if (!mask(i, j)) continue;
      num = std::max(num, std::abs(estimate(i, j) - truth(i, j)));
      den = std::max(den, std::abs(truth(i, j)));
    }
  return den > 0 ? num / den : num;
}

namespace {

// Misfit of the rows u(x_i, .) - Phi(x_i, .) against a regular expansion
// sum_{|n| <= N} c_n J_n(k rho) e^{i n theta} about the centre of Omega.
double regular_misfit(const CMat& U, const BoolMat& mask, const PhaselessDataset& ds, int N) {
  const MeasurementGrid& g = ds.grid;
  const int nr = g.n_receivers(), ns = g.n_sources();
  const Point c = g.gamma.region.center;
  double total = 0;
  for (int i = 0; i < nr; ++i) {
    std::vector<int> cols;
    for (int j = 0; j < ns; ++j)
      if (mask(i, j)) cols.push_back(j);
    if (int(cols.size()) <= 2 * N + 1) continue;
    CMat A(cols.size(), 2 * N + 1);
    CVec y(cols.size());
    for (size_t q = 0; q < cols.size(); ++q) {
      Point d = g.sources[cols[q]] - c;
      double rho = d.norm(), th = std::atan2(d.y(), d.x());
      for (int n = -N; n <= N; ++n) {
        double jn = bessel_j(std::abs(n), ds.k * rho) * ((n < 0 && (-n) % 2) ? -1.0 : 1.0);
        A(q, n + N) = jn * std::exp(kI * (n * th));
      }
      y(q) = U(i, cols[q]) - fundamental_2d(ds.k, g.receivers[i], g.sources[cols[q]]);
    }
    CVec coef = A.colPivHouseholderQr().solve(y);
    total += (A * coef - y).squaredNorm();
  }
  return total;
}

}  // namespace

RetrievalReport retrieve(const PhaselessDataset& ds, const RetrievalOptions& opt, const GridFields* oracle) {
  PhaseDecomposition pd = decompose(ds, opt.tau, opt.clamp_tol);
  const int nr = int(ds.s.rows()), ns = int(ds.s.cols());
  RMat S(nr, ns);
  int ambiguous = 0;
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < ns; ++j) {
      double rs = pd.r(i) * pd.s(i, j);
      S(i, j) = pd.mask(i, j) ? rs * std::sin(clamp_acos(pd.cos_delta(i, j))) : 0.0;
      if (pd.mask(i, j) && S(i, j) <= 1e-8 * rs) ++ambiguous;
    }
  Eigen::MatrixXi sigma = continuity_signs(pd.cross, S, pd.mask);
  // Relative modulus noise of level d perturbs graze phases by about d radians.
  double floor = std::max(ds.noise.level, 1e-12);
  if (ds.grid.has_graze()) floor /= graze_phase_scale(ds);

  RetrievalReport rep;
  std::optional<AnchorEstimate> anchor;
  try {
    anchor = anchor_from_graze(ds, opt.clamp_tol);
  } catch (const Error& e) {
    if (e.code() != "anchor_unavailable") throw;
    // Without an anchor only the equivalence class is available.
    auto [d, c] = build_branches(pd, sigma, CVec::Ones(nr));
    rep.direct = d;
    rep.conjugate = c;
    rep.field = d.field;
    rep.selected = Selection::undetermined;
    rep.status = std::string("undetermined: ") + e.what() + "; field known up to a per-receiver phase";
    rep.noise_floor = floor;
  }
  if (anchor) {
    // Orient the sign field: the true row minus Phi is a regular wave on Gamma.
    auto [dp, cp] = build_branches(pd, sigma, anchor->gamma);
    Eigen::MatrixXi flipped = -sigma;
    auto [dm, cm] = build_branches(pd, flipped, anchor->gamma);
    double mp = regular_misfit(dp.field, pd.mask, ds, opt.regular_order);
    double mm = regular_misfit(dm.field, pd.mask, ds, opt.regular_order);
    BranchCandidate d = mp <= mm ? dp : dm, c = mp <= mm ? cp : cm;
    rep.orientation_ratio = std::max(mp, mm) / std::max(std::min(mp, mm), 1e-300);
    d.graze_field = anchor->graze_field;
    c.graze_field = anchor->graze_field.conjugate();
    RetrievalReport sel = select_branch(d, c, ds, floor);
    sel.orientation_ratio = rep.orientation_ratio;
    rep = sel;
    rep.anchored = true;
    rep.anchor_residuals = anchor->residual;
  }
  rep.flagged = int(pd.flagged.count());
  rep.ambiguous = ambiguous;
  rep.mask_fraction = double(pd.mask.count()) / double(pd.mask.size());
  if (oracle) rep.oracle_error = field_error(rep.field, oracle->U, pd.mask);
  return rep;
}

UniquenessReport verify_uniqueness_steps(const PhaselessDataset& a, const PhaselessDataset& b, double tol_rel) {
  if (a.s.rows() != b.s.rows() || a.s.cols() != b.s.cols())
    throw config_error("shape_mismatch", "datasets must share the grid");
  UniquenessReport u;
  u.dr = (a.r - b.r).cwiseAbs().maxCoeff();
  u.ds = (a.s - b.s).cwiseAbs().maxCoeff();
  u.dt = (a.t - b.t).cwiseAbs().maxCoeff();
  u.scale = std::max({a.r.maxCoeff(), b.r.maxCoeff(), a.s.maxCoeff(), b.s.maxCoeff(), a.t.maxCoeff(),
                      b.t.maxCoeff()});
  u.distinguishable = std::max({u.dr, u.ds, u.dt}) > tol_rel * u.scale;
  return u;
}

UniquenessReport verify_uniqueness_steps(const ScatteringConfig& a, const ScatteringConfig& b,
                                         const MeasurementGrid& grid, double tol_rel) {
  if (a.k != b.k) throw config_error("shape_mismatch", "configurations must share k");
  return verify_uniqueness_steps(synthesize(a, grid), synthesize(b, grid), tol_rel);
}

}  // namespace cavity
