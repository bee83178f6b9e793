#include "cavity/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "json.hpp"

#include "cavity/parallel.hpp"

namespace cavity {

using nlohmann::json;

namespace {

double arc_distance(const Arc& arc, const Point& p) {
  Point d = p - arc.center;
  double th = std::atan2(d.y(), d.x());
  // Distance to the nearest arc point: angular clamp on the circle.
  double best = std::numeric_limits<double>::max();
  for (double shift : {-2 * kPi, 0.0, 2 * kPi}) {
    double a = std::clamp(th + shift, arc.theta0, arc.theta1);
    best = std::min(best, (arc.point(a) - p).norm());
  }
  return best;
}

}  // namespace

MeasurementGrid build_grid(const ScatteringConfig& cfg, const AdmissiblePair& sigma,
                           const AdmissiblePair& gamma, const Point& z0, int n_receivers,
                           int n_sources, const std::optional<GrazeSpec>& graze) {
  if (n_receivers < 1 || n_sources < 1) throw config_error("invalid_counts", "grid counts must be positive");
  const double clear = 1e-3 * cfg.cavity.diameter();
  const Disk& G = sigma.region;
  const Disk& O = gamma.region;
  if ((O.center - G.center).norm() + O.radius >= G.radius - clear)
    throw config_error("nesting_violation", "closure of Omega is not inside G");
  for (int i = 0; i < 720; ++i) {
    double th = 2 * kPi * i / 720;
    Point p = G.center + G.radius * Point(std::cos(th), std::sin(th));
    if (!cfg.cavity.contains(p) || cfg.cavity.distance(p) <= clear)
      throw config_error("nesting_violation", "closure of G is not inside D");
  }
  if (cfg.ball && (cfg.ball->center - G.center).norm() <= G.radius + cfg.ball->radius + clear)
    throw config_error("nesting_violation", "closure of G meets the reference ball");
  if (!cfg.cavity.contains(z0) || cfg.cavity.distance(z0) <= clear)
    throw config_error("invalid_z0", "z0 must lie inside the cavity");
  if (cfg.ball && (z0 - cfg.ball->center).norm() <= cfg.ball->radius + clear)
    throw config_error("invalid_z0", "z0 must lie outside the closed reference ball");
  if (arc_distance(gamma.arc, z0) <= clear) throw config_error("invalid_z0", "z0 must not lie on Gamma");
  if (arc_distance(sigma.arc, z0) <= clear) throw config_error("invalid_z0", "z0 must not lie on Sigma");

  MeasurementGrid g;
  g.sigma = sigma;
  g.gamma = gamma;
  g.z0 = z0;
  for (double th : sigma.arc.angles(n_receivers)) {
    g.receivers.push_back(sigma.arc.point(th));
    g.receiver_normals.push_back(sigma.arc.normal(th));
  }
  for (double th : gamma.arc.angles(n_sources)) g.sources.push_back(gamma.arc.point(th));
  if (graze) {
    if (!(graze->eps > 0) || graze->levels.empty())
      throw config_error("invalid_graze", "graze needs eps > 0 and at least one level");
    for (double l : graze->levels)
      if (!(l > 0) || l > 1) throw config_error("invalid_graze", "graze levels must lie in (0, 1]");
    if (graze->eps >= 0.5 * (G.radius - O.radius))
      throw config_error("invalid_graze", "graze separation too large for the grid");
    g.eps = graze->eps;
    g.levels = graze->levels;
    for (int i = 0; i < n_receivers; ++i) {
      std::vector<Point> row;
      for (double l : g.levels) row.push_back(g.receivers[i] - g.eps * l * g.receiver_normals[i]);
      g.graze.push_back(row);
    }
  }
  return g;
}

GridFields compute_fields(const Solver& solver, const MeasurementGrid& grid) {
  const int nr = grid.n_receivers(), ns = grid.n_sources(), nl = grid.n_levels();
  GridFields f;
  f.G.resize(nr, nl);
  // z0 first, then the Gamma sources, solved as one block.
  std::vector<Point> z{grid.z0};
  z.insert(z.end(), grid.sources.begin(), grid.sources.end());
  CMat all = solver.total_fields(grid.receivers, z);
  f.u0 = all.col(0);
  f.U = all.rightCols(ns);
  if (nl)
    parallel_for(nr, [&](int i) { f.G.row(i) = solver.total_fields({grid.receivers[i]}, grid.graze[i], true).row(0); });
  return f;
}

PhaselessDataset moduli(const GridFields& f, const MeasurementGrid& grid, double k) {
  PhaselessDataset ds;
  ds.k = k;
  ds.grid = grid;
  const int nr = grid.n_receivers(), ns = grid.n_sources(), nl = grid.n_levels();
  ds.r = f.u0.cwiseAbs();
  ds.s.resize(nr, ns);
  ds.t.resize(nr, ns);
  ds.gs.resize(nr, nl);
  ds.gt.resize(nr, nl);
  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < ns; ++j) {
      ds.s(i, j) = std::abs(f.U(i, j));
      ds.t(i, j) = std::abs(f.u0(i) + f.U(i, j));
    }
    for (int l = 0; l < nl; ++l) {
      ds.gs(i, l) = std::abs(f.G(i, l));
      ds.gt(i, l) = std::abs(f.u0(i) + f.G(i, l));
    }
  }
  return ds;
}

PhaselessDataset synthesize(const ScatteringConfig& cfg, const MeasurementGrid& grid) {
  Solver solver(cfg);
  return moduli(compute_fields(solver, grid), grid, cfg.k);
}

PhaselessDataset add_noise(const PhaselessDataset& ds, double level, std::uint64_t seed) {
  if (!(level >= 0) || !std::isfinite(level)) throw config_error("invalid_noise", "noise level must be >= 0");
  PhaselessDataset out = ds;
  out.noise = {level, seed};
  if (level == 0) return out;
  std::mt19937_64 rng(seed);
  // Uniform on [-1, 1] from the top 53 bits; independent of the standard
  // library's distribution implementation.
  auto xi = [&] { return 2.0 * double(rng() >> 11) * 0x1.0p-53 - 1.0; };
  auto perturb = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = std::max(0.0, m(i, j) * (1 + level * xi()));
  };
  perturb(out.r);
  perturb(out.s);
  perturb(out.t);
  perturb(out.gs);
  perturb(out.gt);
  return out;
}

namespace {

json pt(const Point& p) { return json::array({p.x(), p.y()}); }

json pts(const std::vector<Point>& v) {
  json a = json::array();
  for (const Point& p : v) a.push_back(pt(p));
  return a;
}

json mat(const RMat& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

json pair_json(const AdmissiblePair& p) {
  return {{"center", pt(p.region.center)},
          {"radius", p.region.radius},
          {"theta0", p.arc.theta0},
          {"theta1", p.arc.theta1}};
}

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw config_error("dataset_parse", "dataset field '" + field + "': " + what);
}

const json& need(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) bad(where + key, "missing");
  return j.at(key);
}

double num(const json& j, const std::string& field) {
  if (!j.is_number()) bad(field, "expected a number");
  return j.get<double>();
}

Point read_pt(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) bad(field, "expected [x, y]");
  return Point(num(j[0], field), num(j[1], field));
}

std::vector<Point> read_pts(const json& j, const std::string& field) {
  if (!j.is_array()) bad(field, "expected an array of points");
  std::vector<Point> v;
  for (size_t i = 0; i < j.size(); ++i) v.push_back(read_pt(j[i], field + "[" + std::to_string(i) + "]"));
  return v;
}

RMat read_mat(const json& j, const std::string& field, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || Eigen::Index(j.size()) != rows) bad(field, "row count does not match the grid");
  RMat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[i];
    if (!row.is_array() || Eigen::Index(row.size()) != cols)
      bad(field, "column count does not match the grid in row " + std::to_string(i));
    for (Eigen::Index c = 0; c < cols; ++c) {
      double v = num(row[c], field);
      if (!(v >= 0) || !std::isfinite(v)) bad(field, "negative or non-finite modulus");
      m(i, c) = v;
    }
  }
  return m;
}

AdmissiblePair read_pair(const json& j, const std::string& field) {
  Point c = read_pt(need(j, "center", field + "."), field + ".center");
  double r = num(need(j, "radius", field + "."), field + ".radius");
  double t0 = num(need(j, "theta0", field + "."), field + ".theta0");
  double t1 = num(need(j, "theta1", field + "."), field + ".theta1");
  return {Disk{c, r}, Arc{c, r, t0, t1}};
}

}  // namespace

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("io", "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw config_error("io", "write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

void save(const PhaselessDataset& ds, const std::string& path) {
  const MeasurementGrid& g = ds.grid;
  json graze = nullptr;
  if (g.has_graze()) {
    json p = json::array();
    for (const auto& row : g.graze) p.push_back(pts(row));
    graze = {{"eps", g.eps}, {"levels", g.levels}, {"points", p}};
  }
  std::vector<double> r(ds.r.data(), ds.r.data() + ds.r.size());
  json j = {{"format", "cavity-phaseless-dataset"},
            {"version", 1},
            {"k", ds.k},
            {"grid",
             {{"sigma", pair_json(g.sigma)},
              {"gamma", pair_json(g.gamma)},
              {"z0", pt(g.z0)},
              {"receivers", pts(g.receivers)},
              {"receiver_normals", pts(g.receiver_normals)},
              {"sources", pts(g.sources)},
              {"graze", graze}}},
            {"noise", {{"level", ds.noise.level}, {"seed", ds.noise.seed}}},
            {"r", r},
            {"s", mat(ds.s)},
            {"t", mat(ds.t)},
            {"graze_s", mat(ds.gs)},
            {"graze_t", mat(ds.gt)}};
  write_atomic(path, j.dump(1) + "\n");
}

PhaselessDataset load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("io", "cannot open dataset " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error("dataset_parse", std::string("malformed dataset JSON: ") + e.what());
  }
  if (need(j, "format", "") != "cavity-phaseless-dataset") bad("format", "unexpected value");
  if (need(j, "version", "") != 1) bad("version", "unsupported version");
  PhaselessDataset ds;
  ds.k = num(need(j, "k", ""), "k");
  const json& g = need(j, "grid", "");
  MeasurementGrid& m = ds.grid;
  m.sigma = read_pair(need(g, "sigma", "grid."), "grid.sigma");
  m.gamma = read_pair(need(g, "gamma", "grid."), "grid.gamma");
  m.z0 = read_pt(need(g, "z0", "grid."), "grid.z0");
  m.receivers = read_pts(need(g, "receivers", "grid."), "grid.receivers");
  m.receiver_normals = read_pts(need(g, "receiver_normals", "grid."), "grid.receiver_normals");
  m.sources = read_pts(need(g, "sources", "grid."), "grid.sources");
  if (m.receiver_normals.size() != m.receivers.size())
    bad("grid.receiver_normals", "length does not match receivers");
  const json& gz = need(g, "graze", "grid.");
  if (!gz.is_null()) {
    m.eps = num(need(gz, "eps", "grid.graze."), "grid.graze.eps");
    const json& lv = need(gz, "levels", "grid.graze.");
    if (!lv.is_array() || lv.empty()) bad("grid.graze.levels", "expected a nonempty array");
    for (const json& v : lv) m.levels.push_back(num(v, "grid.graze.levels"));
    const json& p = need(gz, "points", "grid.graze.");
    if (!p.is_array() || p.size() != m.receivers.size()) bad("grid.graze.points", "one row per receiver expected");
    for (size_t i = 0; i < p.size(); ++i) {
      auto row = read_pts(p[i], "grid.graze.points");
      if (row.size() != m.levels.size()) bad("grid.graze.points", "one point per level expected");
      m.graze.push_back(row);
    }
  }
  const Eigen::Index nr = m.n_receivers(), ns = m.n_sources(), nl = m.n_levels();
  const json& r = need(j, "r", "");
  if (!r.is_array() || Eigen::Index(r.size()) != nr) bad("r", "length does not match receivers");
  ds.r.resize(nr);
  for (Eigen::Index i = 0; i < nr; ++i) {
    ds.r(i) = num(r[i], "r");
    if (!(ds.r(i) >= 0) || !std::isfinite(ds.r(i))) bad("r", "negative or non-finite modulus");
  }
  ds.s = read_mat(need(j, "s", ""), "s", nr, ns);
  ds.t = read_mat(need(j, "t", ""), "t", nr, ns);
  ds.gs = read_mat(need(j, "graze_s", ""), "graze_s", nr, nl);
  ds.gt = read_mat(need(j, "graze_t", ""), "graze_t", nr, nl);
  const json& nz = need(j, "noise", "");
  ds.noise.level = num(need(nz, "level", "noise."), "noise.level");
  const json& seed = need(nz, "seed", "noise.");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
    bad("noise.seed", "expected a nonnegative integer");
  ds.noise.seed = seed.get<std::uint64_t>();
  return ds;
}

}  // namespace cavity
