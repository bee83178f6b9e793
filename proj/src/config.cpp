#include "cavity/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cavity {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw config_error("config_parse", "config field '" + field + "': " + what);
}

// Object reader that remembers which keys were consumed so leftovers can be rejected.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) bad(path_.empty() ? "<root>" : path_, "expected an object");
  }
  ~Obj() = default;

  bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }
  const json* get(const std::string& k) {
    used_.insert(k);
    return has(k) ? &j_.at(k) : nullptr;
  }
  std::string field(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  double num(const std::string& k, double dflt) {
    const json* v = get(k);
    if (!v) return dflt;
    if (!v->is_number()) bad(field(k), "expected a number");
    return v->get<double>();
  }
  int integer(const std::string& k, int dflt) {
    const json* v = get(k);
    if (!v) return dflt;
    if (!v->is_number_integer()) bad(field(k), "expected an integer");
    return v->get<int>();
  }
  bool boolean(const std::string& k, bool dflt) {
    const json* v = get(k);
    if (!v) return dflt;
    if (!v->is_boolean()) bad(field(k), "expected true or false");
    return v->get<bool>();
  }
  std::string str(const std::string& k, const std::string& dflt) {
    const json* v = get(k);
    if (!v) return dflt;
    if (!v->is_string()) bad(field(k), "expected a string");
    return v->get<std::string>();
  }
  Point point(const std::string& k, const Point& dflt) {
    const json* v = get(k);
    if (!v) return dflt;
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
      bad(field(k), "expected [x, y]");
    return Point((*v)[0].get<double>(), (*v)[1].get<double>());
  }
  std::vector<double> numbers(const std::string& k, const std::vector<double>& dflt) {
    const json* v = get(k);
    if (!v) return dflt;
    if (!v->is_array()) bad(field(k), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number()) bad(field(k), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  // Complex value as a number or [re, im].
  cplx complex(const std::string& k, cplx dflt) {
    const json* v = get(k);
    if (!v) return dflt;
    return to_complex(*v, field(k));
  }
  static cplx to_complex(const json& v, const std::string& f) {
    if (v.is_number()) return v.get<double>();
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
      return {v[0].get<double>(), v[1].get<double>()};
    bad(f, "expected a number or [re, im]");
  }
  std::optional<Obj> child(const std::string& k) {
    const json* v = get(k);
    if (!v) return std::nullopt;
    return Obj(*v, field(k));
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) bad(field(it.key()), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

ClosedCurve read_curve(Obj o) {
  std::string kind = o.str("kind", "circle");
  ClosedCurve c = ClosedCurve::circle(Point::Zero(), 1);
  if (kind == "circle") {
    c = ClosedCurve::circle(o.point("center", Point::Zero()), o.num("radius", 2));
  } else if (kind == "kite") {
    c = ClosedCurve::kite(o.point("center", Point::Zero()), o.num("scale", 1));
  } else if (kind == "star") {
    c = ClosedCurve::star(o.point("center", Point::Zero()), o.numbers("a", {1.0}), o.numbers("b", {}));
  } else {
    bad(o.field("kind"), "expected circle, kite or star");
  }
  o.finish();
  return c;
}

BoundaryCondition read_bc(Obj o) {
  std::string kind = o.str("kind", "sound_soft");
  BoundaryCondition bc;
  if (kind == "sound_soft") {
    bc = BoundaryCondition::dirichlet();
  } else if (kind == "impedance") {
    bc = BoundaryCondition::impedance(o.complex("lambda", 1.0));
    for (const char* key : {"cos", "sin"}) {
      const json* v = o.get(key);
      if (!v) continue;
      if (!v->is_array()) bad(o.field(key), "expected an array");
      auto& dst = std::string(key) == "cos" ? bc.cos_coef : bc.sin_coef;
      for (const auto& e : *v) dst.push_back(Obj::to_complex(e, o.field(key)));
    }
  } else {
    bad(o.field("kind"), "expected sound_soft or impedance");
  }
  o.finish();
  return bc;
}

ArcSpec read_arc(Obj o, const ArcSpec& d) {
  ArcSpec a;
  a.center = o.point("center", d.center);
  a.radius = o.num("radius", d.radius);
  a.theta0 = o.num("theta0", d.theta0);
  a.theta1 = o.num("theta1", d.theta1);
  o.finish();
  return a;
}

json pt(const Point& p) { return json::array({p.x(), p.y()}); }
json cx(cplx z) { return z.imag() == 0 ? json(z.real()) : json::array({z.real(), z.imag()}); }

json arc_json(const ArcSpec& a) {
  return {{"center", pt(a.center)}, {"radius", a.radius}, {"theta0", a.theta0}, {"theta1", a.theta1}};
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.scattering.k = 2;
  c.scattering.cavity = ClosedCurve::circle(Point::Zero(), 2);
  c.scattering.bc = BoundaryCondition::dirichlet();
  c.scattering.ball = ReferenceBall{Point(0, -1.3), 0.45, 2.0};
  c.grid.sigma = {Point(0, 0.45), 1.1, 0, kPi};
  c.grid.gamma = {Point(0, 0.45), 0.6, 0, kPi};
  c.grid.z0 = Point(-1.5, -0.6);
  c.inversion.center = Point::Zero();
  c.inversion.initial_radius = 2.15;
  c.inversion.q = 0;
  c.forward.source = Point(-1.5, -0.6);
  c.forward.lower = Point(-1.9, -1.9);
  c.forward.upper = Point(1.9, 1.9);
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error("config_parse", std::string("config is not valid JSON: ") + e.what());
  }
  Obj o(root, "");
  const json* ver = o.get("version");
  if (!ver) bad("version", "missing");
  if (!ver->is_number_integer()) bad("version", "expected an integer");
  if (ver->get<int>() != kConfigVersion)
    bad("version", "unsupported version " + std::to_string(ver->get<int>()) + ", expected " +
                       std::to_string(kConfigVersion));
  if (o.str("format", "cavity-experiment") != "cavity-experiment") bad("format", "expected cavity-experiment");

  ExperimentConfig c = default_config();
  ScatteringConfig& s = c.scattering;
  s.k = o.num("k", s.k);
  if (auto v = o.child("cavity")) s.cavity = read_curve(*v);
  if (auto v = o.child("bc")) s.bc = read_bc(*v);
  if (o.has("ball")) {
    Obj b = *o.child("ball");
    ReferenceBall d = s.ball.value_or(ReferenceBall{});
    s.ball = ReferenceBall{b.point("center", d.center), b.num("radius", d.radius), b.num("lambda0", d.lambda0)};
    b.finish();
  } else if (root.contains("ball")) {
    o.get("ball");
    s.ball.reset();  // explicit null removes the reference ball
  }
  if (auto v = o.child("nodes")) {
    s.n_D = v->integer("cavity", s.n_D);
    s.n_B = v->integer("ball", s.n_B);
    v->finish();
  }

  if (auto g = o.child("grid")) {
    if (auto v = g->child("sigma")) c.grid.sigma = read_arc(*v, c.grid.sigma);
    if (auto v = g->child("gamma")) c.grid.gamma = read_arc(*v, c.grid.gamma);
    c.grid.z0 = g->point("z0", c.grid.z0);
    c.grid.receivers = g->integer("receivers", c.grid.receivers);
    c.grid.sources = g->integer("sources", c.grid.sources);
    if (g->has("graze")) {
      Obj gz = *g->child("graze");
      c.grid.graze_eps_rel = gz.num("eps_rel", c.grid.graze_eps_rel.value_or(1e-3));
      c.grid.graze_levels = gz.numbers("levels", c.grid.graze_levels);
      gz.finish();
    } else if (root.contains("grid") && root["grid"].contains("graze")) {
      g->get("graze");
      c.grid.graze_eps_rel.reset();
    }
    g->finish();
  }

  c.noise = o.num("noise", c.noise);
  if (!(c.noise >= 0)) bad("noise", "must be nonnegative");
  {
    const json* v = o.get("seed");
    if (v) {
      if (!v->is_number_unsigned()) bad("seed", "expected a nonnegative integer");
      c.seed = v->get<std::uint64_t>();
    }
  }
  if (auto r = o.child("retrieval")) {
    c.retrieval.tau = r->num("tau", c.retrieval.tau);
    c.retrieval.clamp_tol = r->num("clamp_tol", c.retrieval.clamp_tol);
    c.retrieval.regular_order = r->integer("regular_order", c.retrieval.regular_order);
    r->finish();
  }
  if (auto r = o.child("inversion")) {
    InversionSpec& iv = c.inversion;
    iv.q = r->integer("q", iv.q);
    if (r->has("center"))
      iv.center = r->point("center", Point::Zero());
    else if (root["inversion"].contains("center")) {
      r->get("center");
      iv.center.reset();
    }
    iv.initial_radius = r->num("initial_radius", iv.initial_radius);
    iv.alpha = r->num("alpha", iv.alpha);
    iv.max_iter = r->integer("max_iter", iv.max_iter);
    iv.continuation = r->boolean("continuation", iv.continuation);
    iv.classify = r->boolean("classify", iv.classify);
    r->finish();
  }
  if (auto f = o.child("forward")) {
    c.forward.source = f->point("source", c.forward.source);
    c.forward.lower = f->point("lower", c.forward.lower);
    c.forward.upper = f->point("upper", c.forward.upper);
    c.forward.nx = f->integer("nx", c.forward.nx);
    c.forward.ny = f->integer("ny", c.forward.ny);
    f->finish();
  }
  c.output = o.str("output", c.output);
  o.finish();

  // Value checks, then the nesting checks of the measurement grid.
  if (c.inversion.q < 0 || c.inversion.q > 8) bad("inversion.q", "must lie in [0, 8]");
  if (c.inversion.max_iter < 0) bad("inversion.max_iter", "must be nonnegative");
  if (!(c.inversion.initial_radius > 0)) bad("inversion.initial_radius", "must be positive");
  if (c.forward.nx < 1 || c.forward.ny < 1) bad("forward.nx", "evaluation grid needs at least one point per axis");
  if (!(c.retrieval.tau > 0)) bad("retrieval.tau", "must be positive");
  if (c.retrieval.regular_order < 0) bad("retrieval.regular_order", "must be nonnegative");
  validate(c.scattering);
  make_grid(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("io", "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& c) {
  const ScatteringConfig& s = c.scattering;
  json cav;
  switch (s.cavity.kind()) {
    case CurveKind::circle:
      cav = {{"kind", "circle"}, {"center", pt(s.cavity.center())}, {"radius", s.cavity.radius()}};
      break;
    case CurveKind::kite:
      cav = {{"kind", "kite"}, {"center", pt(s.cavity.center())}, {"scale", s.cavity.scale()}};
      break;
    case CurveKind::star:
      cav = {{"kind", "star"}, {"center", pt(s.cavity.center())}, {"a", s.cavity.a()}, {"b", s.cavity.b()}};
      break;
  }
  json bc = {{"kind", s.bc.kind == BcKind::sound_soft ? "sound_soft" : "impedance"}};
  if (s.bc.kind == BcKind::impedance) {
    bc["lambda"] = cx(s.bc.c0);
    json cs = json::array(), sn = json::array();
    for (cplx z : s.bc.cos_coef) cs.push_back(cx(z));
    for (cplx z : s.bc.sin_coef) sn.push_back(cx(z));
    if (!cs.empty()) bc["cos"] = cs;
    if (!sn.empty()) bc["sin"] = sn;
  }
  json j;
  j["format"] = "cavity-experiment";
  j["version"] = kConfigVersion;
  j["k"] = s.k;
  j["cavity"] = cav;
  j["bc"] = bc;
  j["ball"] = s.ball ? json{{"center", pt(s.ball->center)}, {"radius", s.ball->radius}, {"lambda0", s.ball->lambda0}}
                     : json(nullptr);
  j["nodes"] = {{"cavity", s.n_D}, {"ball", s.n_B}};
  json grid = {{"sigma", arc_json(c.grid.sigma)},
               {"gamma", arc_json(c.grid.gamma)},
               {"z0", pt(c.grid.z0)},
               {"receivers", c.grid.receivers},
               {"sources", c.grid.sources}};
  grid["graze"] = c.grid.graze_eps_rel
                      ? json{{"eps_rel", *c.grid.graze_eps_rel}, {"levels", c.grid.graze_levels}}
                      : json(nullptr);
  j["grid"] = grid;
  j["noise"] = c.noise;
  j["seed"] = c.seed;
  j["retrieval"] = {{"tau", c.retrieval.tau},
                    {"clamp_tol", c.retrieval.clamp_tol},
                    {"regular_order", c.retrieval.regular_order}};
  j["inversion"] = {{"q", c.inversion.q},
                    {"center", c.inversion.center ? pt(*c.inversion.center) : json(nullptr)},
                    {"initial_radius", c.inversion.initial_radius},
                    {"alpha", c.inversion.alpha},
                    {"max_iter", c.inversion.max_iter},
                    {"continuation", c.inversion.continuation},
                    {"classify", c.inversion.classify}};
  j["forward"] = {{"source", pt(c.forward.source)},
                  {"lower", pt(c.forward.lower)},
                  {"upper", pt(c.forward.upper)},
                  {"nx", c.forward.nx},
                  {"ny", c.forward.ny}};
  j["output"] = c.output;
  return j.dump(2) + "\n";
}

MeasurementGrid make_grid(const ExperimentConfig& c) {
  const double k = c.scattering.k;
  auto pair = [&](const ArcSpec& a) { return make_admissible(k, a.center, a.radius, a.theta0, a.theta1); };
  std::optional<GrazeSpec> gz;
  if (c.grid.graze_eps_rel) {
    if (!(*c.grid.graze_eps_rel > 0)) bad("grid.graze.eps_rel", "must be positive");
    gz = GrazeSpec{*c.grid.graze_eps_rel * c.scattering.cavity.diameter(), c.grid.graze_levels};
  }
  return build_grid(c.scattering, pair(c.grid.sigma), pair(c.grid.gamma), c.grid.z0, c.grid.receivers,
                    c.grid.sources, gz);
}

StarShapeParam initial_shape(const ExperimentConfig& c) {
  Point center = c.inversion.center.value_or(c.scattering.ball ? c.scattering.ball->center : Point::Zero());
  return StarShapeParam::circle(center, c.inversion.initial_radius, c.inversion.q);
}

}  // namespace cavity
