#include "cavity/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cavity {

namespace {

constexpr int kCheckGrid = 512;

bool finite(const Point& p) { return std::isfinite(p.x()) && std::isfinite(p.y()); }

double cross2(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_cross(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  double d1 = cross2(p2 - p1, q1 - p1), d2 = cross2(p2 - p1, q2 - p1);
  double d3 = cross2(q2 - q1, p1 - q1), d4 = cross2(q2 - q1, p2 - q1);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

}  // namespace

ClosedCurve ClosedCurve::circle(const Point& center, double radius) {
  ClosedCurve c;
  c.kind_ = CurveKind::circle;
  c.center_ = center;
  c.radius_ = radius;
  c.validate();
  return c;
}

ClosedCurve ClosedCurve::kite(const Point& center, double scale) {
  ClosedCurve c;
  c.kind_ = CurveKind::kite;
  c.center_ = center;
  c.scale_ = scale;
  c.validate();
  return c;
}

ClosedCurve ClosedCurve::star(const Point& center, std::vector<double> a, std::vector<double> b) {
  ClosedCurve c;
  c.kind_ = CurveKind::star;
  c.center_ = center;
  if (a.empty()) throw config_error("invalid_curve", "star curve needs at least a0");
  if (b.size() + 1 != a.size())
    throw config_error("invalid_curve", "star curve needs b1..bq matching a1..aq");
  c.a_ = std::move(a);
  c.b_ = std::move(b);
  c.validate();
  return c;
}

double ClosedCurve::rho(double t, int deriv) const {
  double v = deriv == 0 ? a_[0] : 0.0;
  for (size_t j = 1; j < a_.size(); ++j) {
    double jt = double(j) * t, c = std::cos(jt), s = std::sin(jt), f = 1.0;
    for (int d = 0; d < deriv; ++d) {
      double nc = -s, ns = c;
      c = nc;
      s = ns;
      f *= double(j);
    }
    v += f * (a_[j] * c + b_[j - 1] * s);
  }
  return v;
}

void ClosedCurve::validate() const {
  if (!finite(center_)) throw config_error("invalid_curve", "non-finite curve center");
  switch (kind_) {
    case CurveKind::circle:
      if (!std::isfinite(radius_) || radius_ <= 0)
        throw config_error("invalid_curve", "circle radius must be positive and finite");
      return;
    case CurveKind::kite:
      if (!std::isfinite(scale_) || scale_ <= 0)
        throw config_error("invalid_curve", "kite scale must be positive and finite");
      return;
    case CurveKind::star:
      break;
  }
  for (double v : a_)
    if (!std::isfinite(v)) throw config_error("invalid_curve", "non-finite star coefficient");
  for (double v : b_)
    if (!std::isfinite(v)) throw config_error("invalid_curve", "non-finite star coefficient");
  for (int i = 0; i < kCheckGrid; ++i) {
    double t = 2 * kPi * i / kCheckGrid;
    if (rho(t, 0) <= 0) throw config_error("invalid_curve", "star radial function not positive");
    if (d1(t).norm() <= 0) throw config_error("invalid_curve", "star curve has zero speed");
  }
}

Point ClosedCurve::position(double t) const {
  switch (kind_) {
    case CurveKind::circle:
      return center_ + radius_ * Point(std::cos(t), std::sin(t));
    case CurveKind::kite:
      return center_ + scale_ * Point(std::cos(t) + 0.65 * std::cos(2 * t) - 0.65, 1.5 * std::sin(t));
    case CurveKind::star:
      return center_ + rho(t, 0) * Point(std::cos(t), std::sin(t));
  }
  return center_;
}

Point ClosedCurve::d1(double t) const {
  switch (kind_) {
    case CurveKind::circle:
      return radius_ * Point(-std::sin(t), std::cos(t));
    case CurveKind::kite:
      return scale_ * Point(-std::sin(t) - 1.3 * std::sin(2 * t), 1.5 * std::cos(t));
    case CurveKind::star: {
      double r = rho(t, 0), rp = rho(t, 1), c = std::cos(t), s = std::sin(t);
      return Point(rp * c - r * s, rp * s + r * c);
    }
  }
  return Point::Zero();
}

Point ClosedCurve::d2(double t) const {
  switch (kind_) {
    case CurveKind::circle:
      return -radius_ * Point(std::cos(t), std::sin(t));
    case CurveKind::kite:
      return scale_ * Point(-std::cos(t) - 2.6 * std::cos(2 * t), -1.5 * std::sin(t));
    case CurveKind::star: {
      double r = rho(t, 0), rp = rho(t, 1), rpp = rho(t, 2), c = std::cos(t), s = std::sin(t);
      return Point((rpp - r) * c - 2 * rp * s, (rpp - r) * s + 2 * rp * c);
    }
  }
  return Point::Zero();
}

CurvePoint ClosedCurve::evaluate(double t) const {
  if (!std::isfinite(t)) throw config_error("invalid_curve", "non-finite curve parameter");
  CurvePoint p;
  p.x = position(t);
  Point d = d1(t);
  p.speed = d.norm();
  p.tangent = d / p.speed;
  p.normal = Point(p.tangent.y(), -p.tangent.x());
  return p;
}

std::vector<Point> ClosedCurve::sample(int m) const {
  std::vector<Point> out(m);
  for (int i = 0; i < m; ++i) out[i] = position(2 * kPi * i / m);
  return out;
}

bool ClosedCurve::contains(const Point& p) const {
  switch (kind_) {
    case CurveKind::circle:
      return (p - center_).norm() < radius_;
    case CurveKind::star: {
      Point d = p - center_;
      double th = std::atan2(d.y(), d.x());
      if (th < 0) th += 2 * kPi;
      return d.norm() < rho(th, 0);
    }
    case CurveKind::kite:
      break;
  }
  // Winding number against a fine polygon, then a distance guard for points
  // close to the boundary where the polygon is not trustworthy.
  const int m = 4096;
  auto pts = sample(m);
  double w = 0;
  for (int i = 0; i < m; ++i) {
    Point a = pts[i] - p, b = pts[(i + 1) % m] - p;
    w += std::atan2(cross2(a, b), a.dot(b));
  }
  bool inside = std::abs(w) > kPi;
  if (distance(p) < 1e-6 * diameter()) {
    // Decide with the local normal.
    double best = std::numeric_limits<double>::max(), tb = 0;
    for (int i = 0; i < m; ++i) {
      double d = (pts[i] - p).norm();
      if (d < best) best = d, tb = 2 * kPi * i / m;
    }
    CurvePoint cp = evaluate(tb);
    inside = (p - cp.x).dot(cp.normal) < 0;
  }
  return inside;
}

double ClosedCurve::distance(const Point& p) const {
  if (kind_ == CurveKind::circle) return std::abs((p - center_).norm() - radius_);
  const int m = 1024;
  double best = std::numeric_limits<double>::max(), tb = 0;
  for (int i = 0; i < m; ++i) {
    double t = 2 * kPi * i / m, d = (position(t) - p).norm();
    if (d < best) best = d, tb = t;
  }
  // Newton on g(t) = (x(t) - p) . x'(t)
  double t = tb;
  for (int it = 0; it < 20; ++it) {
    Point r = position(t) - p, v = d1(t), a = d2(t);
    double g = r.dot(v), gp = v.dot(v) + r.dot(a);
    if (gp <= 0) break;
    double step = g / gp;
    step = std::clamp(step, -2 * kPi / m, 2 * kPi / m);
    t -= step;
    if (std::abs(step) < 1e-14) break;
  }
  return std::min(best, (position(t) - p).norm());
}

double ClosedCurve::diameter() const {
  if (kind_ == CurveKind::circle) return 2 * radius_;
  auto pts = sample(256);
  double d = 0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, (pts[i] - pts[j]).norm());
  return d;
}

Point Arc::point(double theta) const {
  return center + radius * Point(std::cos(theta), std::sin(theta));
}

Point Arc::normal(double theta) const { return Point(std::cos(theta), std::sin(theta)); }

std::vector<double> Arc::angles(int n) const {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = 0.5 * (theta0 + theta1);
    return out;
  }
  for (int i = 0; i < n; ++i) out[i] = theta0 + (theta1 - theta0) * i / (n - 1);
  return out;
}

AdmissiblePair make_admissible(double k, const Point& center, double radius, double theta0,
                               double theta1) {
  if (!(k > 0) || !std::isfinite(k)) throw config_error("invalid_wavenumber", "k must be positive");
  if (!finite(center) || !(radius > 0) || !std::isfinite(radius))
    throw config_error("invalid_region", "region radius must be positive and finite");
  if (!(theta1 > theta0) || !std::isfinite(theta0) || !std::isfinite(theta1))
    throw config_error("invalid_arc", "arc span must be nonempty");
  if (k * radius >= kPi)
    throw config_error("admissibility_violation",
                       "region radius " + std::to_string(radius) + " is not below pi/k = " +
                           std::to_string(kPi / k));
  return {Disk{center, radius}, Arc{center, radius, theta0, theta1}};
}

Nodes quadrature_nodes(const ClosedCurve& curve, int n) {
  if (n < 8 || n % 2 != 0)
    throw config_error("invalid_nodes", "node count must be even and at least 8");
  Nodes q;
  q.n = n;
  q.t.resize(n);
  q.x.resize(n);
  q.dx.resize(n);
  q.ddx.resize(n);
  q.normal.resize(n);
  q.speed.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = 2 * kPi * i / n;
    q.t[i] = t;
    q.x[i] = curve.position(t);
    q.dx[i] = curve.d1(t);
    q.ddx[i] = curve.d2(t);
    q.speed[i] = q.dx[i].norm();
    q.normal[i] = Point(q.dx[i].y(), -q.dx[i].x()) / q.speed[i];
  }
  return q;
}

bool is_simple(const ClosedCurve& curve, int m) {
  auto pts = curve.sample(m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 2; j < m; ++j) {
      if (i == 0 && j == m - 1) continue;
      if (segments_cross(pts[i], pts[i + 1], pts[j], pts[(j + 1) % m])) return false;
    }
  return true;
}

double hausdorff(const ClosedCurve& a, const ClosedCurve& b, int m) {
  double h = 0;
  for (const Point& p : a.sample(m)) h = std::max(h, b.distance(p));
  for (const Point& p : b.sample(m)) h = std::max(h, a.distance(p));
  return h;
}

}  // namespace cavity
