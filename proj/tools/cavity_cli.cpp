// Experiment runner: forward, synthesize, retrieve, invert, verify.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cavity/config.hpp"
#include "cavity/inverse.hpp"
#include "cavity/measurement.hpp"
#include "cavity/parallel.hpp"
#include "cavity/retrieval.hpp"
#include "cavity/verify.hpp"

using namespace cavity;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kOutEnv = "CAVITY_OUT";

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

std::string out_dir(const Common& c, const std::string& from_config) {
  if (!c.out.empty()) return c.out;
  if (const char* e = std::getenv(kOutEnv); e && *e) return e;
  return from_config;
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json pt(const Point& p) { return json::array({p.x(), p.y()}); }

json field_json(const CMat& f, const BoolMat& mask) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < f.cols(); ++j)
      row.push_back(mask.size() && !mask(i, j) ? json(nullptr) : json::array({f(i, j).real(), f(i, j).imag()}));
    rows.push_back(row);
  }
  return rows;
}

ExperimentConfig need_config(const Common& c) {
  if (c.config.empty()) throw config_error("missing_config", "--config is required");
  return load_config(c.config);
}

int cmd_forward(const Common& c) {
  ExperimentConfig cfg = need_config(c);
  const EvalSpec& e = cfg.forward;
  Solver solver(cfg.scattering);
  DensitySolution sol = solver.solve(e.source);
  std::ostringstream csv;
  csv << "x1,x2,re_u,im_u,abs_u\n";
  int kept = 0, skipped = 0;
  for (int iy = 0; iy < e.ny; ++iy)
    for (int ix = 0; ix < e.nx; ++ix) {
      double x = e.nx > 1 ? e.lower.x() + (e.upper.x() - e.lower.x()) * ix / (e.nx - 1) : e.lower.x();
      double y = e.ny > 1 ? e.lower.y() + (e.upper.y() - e.lower.y()) * iy / (e.ny - 1) : e.lower.y();
      Point p(x, y);
      cplx u;
      try {
        if ((p - e.source).norm() < 1e-12) throw config_error("eval_at_source", "");
        u = total_field(sol, p);
      } catch (const Error&) {
        ++skipped;  // inside the ball, outside the cavity, at the source or too near a boundary
        continue;
      }
      csv << g17(x) << ',' << g17(y) << ',' << g17(u.real()) << ',' << g17(u.imag()) << ',' << g17(std::abs(u))
          << '\n';
      ++kept;
    }
  std::string dir = out_dir(c, cfg.output);
  write_atomic(join(dir, "field.csv"), csv.str());
  json m = {{"command", "forward"},   {"source", pt(e.source)},     {"points", kept},
            {"skipped_points", skipped}, {"condition", solver.condition()}, {"files", {"field.csv"}}};
  write_atomic(join(dir, "forward.json"), m.dump(2) + "\n");
  std::cout << "forward: " << kept << " points, " << skipped << " skipped -> " << dir << "\n";
  return 0;
}

int cmd_synthesize(const Common& c) {
  ExperimentConfig cfg = need_config(c);
  std::uint64_t seed = c.seed.value_or(cfg.seed);
  MeasurementGrid grid = make_grid(cfg);
  PhaselessDataset ds = synthesize(cfg.scattering, grid);
  if (cfg.noise > 0) ds = add_noise(ds, cfg.noise, seed);
  std::string dir = out_dir(c, cfg.output);
  save(ds, join(dir, "dataset.json"));

  std::ostringstream csv;
  csv << "i,j,r,s,t\n";
  int violations = 0;
  for (int i = 0; i < grid.n_receivers(); ++i)
    for (int j = 0; j < grid.n_sources(); ++j) {
      csv << i << ',' << j << ',' << g17(ds.r(i)) << ',' << g17(ds.s(i, j)) << ',' << g17(ds.t(i, j)) << '\n';
      double tol = 1e-12 * (ds.r(i) + ds.s(i, j)) + 3 * cfg.noise * (ds.r(i) + ds.s(i, j));
      if (ds.t(i, j) > ds.r(i) + ds.s(i, j) + tol || ds.t(i, j) < std::abs(ds.r(i) - ds.s(i, j)) - tol) ++violations;
    }
  write_atomic(join(dir, "dataset.csv"), csv.str());
  if (grid.has_graze()) {
    std::ostringstream g;
    g << "i,level,x1,x2,r,s,t\n";
    for (int i = 0; i < grid.n_receivers(); ++i)
      for (int l = 0; l < grid.n_levels(); ++l)
        g << i << ',' << l << ',' << g17(grid.graze[i][l].x()) << ',' << g17(grid.graze[i][l].y()) << ','
          << g17(ds.r(i)) << ',' << g17(ds.gs(i, l)) << ',' << g17(ds.gt(i, l)) << '\n';
    write_atomic(join(dir, "graze.csv"), g.str());
  }
  json m = {{"command", "synthesize"},
            {"receivers", grid.n_receivers()},
            {"sources", grid.n_sources()},
            {"graze_levels", grid.n_levels()},
            {"graze_note", "graze sources are auxiliary data beyond the three-modulus problem"},
            {"noise", cfg.noise},
            {"seed", seed},
            {"triangle_violations", violations}};
  write_atomic(join(dir, "synthesize.json"), m.dump(2) + "\n");
  std::cout << "synthesize: " << grid.n_receivers() << "x" << grid.n_sources() << " grid, triangle violations "
            << violations << " -> " << dir << "\n";
  return 0;
}

int cmd_retrieve(const Common& c, const std::string& data) {
  PhaselessDataset ds = load(data);
  RetrievalOptions opt;
  std::optional<GridFields> oracle;
  std::string dir = out_dir(c, "out");
  if (!c.config.empty()) {
    ExperimentConfig cfg = load_config(c.config);
    opt = cfg.retrieval;
    dir = out_dir(c, cfg.output);
    oracle = compute_fields(Solver(cfg.scattering), ds.grid);
  }
  RetrievalReport rep = retrieve(ds, opt, oracle ? &*oracle : nullptr);
  json j = {{"format", "cavity-retrieval-report"},
            {"version", 1},
            {"selected", to_string(rep.selected)},
            {"status", rep.status},
            {"margin", rep.margin},
            {"score_direct", std::isfinite(rep.score_direct) ? json(rep.score_direct) : json(nullptr)},
            {"score_conjugate", std::isfinite(rep.score_conjugate) ? json(rep.score_conjugate) : json(nullptr)},
            {"score_units", "graze phase mismatch relative to the phase of Phi"},
            {"phase_gap_rad", rep.phase_gap},
            {"noise_floor", rep.noise_floor},
            {"anchored", rep.anchored},
            {"anchor_residuals", std::vector<double>(rep.anchor_residuals.data(),
                                                     rep.anchor_residuals.data() + rep.anchor_residuals.size())},
            {"orientation_ratio", rep.orientation_ratio},
            {"flagged_entries", rep.flagged},
            {"ambiguous_entries", rep.ambiguous},
            {"mask_fraction", rep.mask_fraction},
            {"oracle_error", rep.oracle_error ? json(*rep.oracle_error) : json(nullptr)},
            {"auxiliary_data", ds.grid.has_graze() ? "graze sources" : "none"},
            {"field", field_json(rep.field, rep.direct.mask)},
            {"direct_field", field_json(rep.direct.field, rep.direct.mask)},
            {"conjugate_field", field_json(rep.conjugate.field, rep.conjugate.mask)}};
  write_atomic(join(dir, "retrieval.json"), j.dump(1) + "\n");
  std::ostringstream csv;
  csv << "i,j,x1,x2,z1,z2,re_u,im_u,masked\n";
  for (int i = 0; i < ds.grid.n_receivers(); ++i)
    for (int jj = 0; jj < ds.grid.n_sources(); ++jj) {
      const Point &x = ds.grid.receivers[i], &z = ds.grid.sources[jj];
      csv << i << ',' << jj << ',' << g17(x.x()) << ',' << g17(x.y()) << ',' << g17(z.x()) << ',' << g17(z.y()) << ','
          << g17(rep.field(i, jj).real()) << ',' << g17(rep.field(i, jj).imag()) << ','
          << (rep.direct.mask(i, jj) ? 1 : 0) << '\n';
    }
  write_atomic(join(dir, "field.csv"), csv.str());
  std::cout << "retrieve: " << to_string(rep.selected) << " (margin " << rep.margin << ")";
  if (rep.oracle_error) std::cout << ", oracle error " << *rep.oracle_error;
  std::cout << " -> " << dir << "\n";
  return 0;
}

// Field and mask from a retrieval report.
std::pair<CMat, BoolMat> read_field(const std::string& path, int nr, int ns) {
  std::ifstream in(path);
  if (!in) throw config_error("io", "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error("field_parse", std::string("malformed field JSON: ") + e.what());
  }
  if (!j.contains("field") || !j["field"].is_array() || int(j["field"].size()) != nr)
    throw config_error("field_parse", "field: expected one row per receiver of the configured grid");
  CMat f = CMat::Zero(nr, ns);
  BoolMat m = BoolMat::Constant(nr, ns, false);
  for (int i = 0; i < nr; ++i) {
    const json& row = j["field"][i];
    if (!row.is_array() || int(row.size()) != ns)
      throw config_error("field_parse", "field: row " + std::to_string(i) + " does not match the source count");
    for (int k = 0; k < ns; ++k) {
      if (row[k].is_null()) continue;
      if (!row[k].is_array() || row[k].size() != 2 || !row[k][0].is_number() || !row[k][1].is_number())
        throw config_error("field_parse", "field: expected [re, im] or null");
      f(i, k) = {row[k][0].get<double>(), row[k][1].get<double>()};
      m(i, k) = true;
    }
  }
  return {f, m};
}

json estimate_json(const CavityEstimate& e) {
  json trace = json::array();
  for (const auto& r : e.trace)
    trace.push_back({{"iter", r.iter}, {"misfit", r.misfit}, {"objective", r.objective}, {"step", r.step}});
  return {{"center", pt(e.shape.center)},
          {"a", e.shape.a},
          {"b", e.shape.b},
          {"bc", e.bc == BcKind::sound_soft ? "sound_soft" : "impedance"},
          {"lambda", e.lambda},
          {"misfit", e.misfit},
          {"initial_misfit", e.initial_misfit},
          {"iterations", e.iterations},
          {"status", e.status},
          {"trace", trace}};
}

int cmd_invert(const Common& c, const std::string& field_path) {
  ExperimentConfig cfg = need_config(c);
  MeasurementGrid grid = make_grid(cfg);
  auto [field, mask] = read_field(field_path, grid.n_receivers(), grid.n_sources());
  InversionData data;
  data.base = cfg.scattering;
  data.grid = grid;
  data.grid.graze.clear();
  data.field = field;
  data.mask = mask;
  ReconstructOptions opt;
  opt.alpha = cfg.inversion.alpha;
  opt.max_iter = cfg.inversion.max_iter;
  opt.continuation = cfg.inversion.continuation;
  StarShapeParam init = initial_shape(cfg);

  json j = {{"format", "cavity-estimate"}, {"version", 1}};
  CavityEstimate best;
  if (cfg.inversion.classify) {
    BcClassification cl = classify_bc(data, init, opt);
    j["classification"] = {{"status", cl.status},
                           {"margin", cl.margin},
                           {"lambda", cl.lambda},
                           {"lambda_below_resolution", cl.lambda_below_resolution}};
    j["sound_soft"] = estimate_json(cl.sound_soft);
    j["impedance"] = estimate_json(cl.impedance);
    best = cl.best();
  } else {
    best = reconstruct(data, init, cfg.scattering.bc, opt);
  }
  j["estimate"] = estimate_json(best);
  std::string dir = out_dir(c, cfg.output);
  write_atomic(join(dir, "estimate.json"), j.dump(2) + "\n");
  std::ostringstream csv;
  csv << "t,x1,x2\n";
  ClosedCurve curve = best.shape.curve();
  for (int i = 0; i < 256; ++i) {
    double t = 2 * kPi * i / 256;
    Point p = curve.position(t);
    csv << g17(t) << ',' << g17(p.x()) << ',' << g17(p.y()) << '\n';
  }
  write_atomic(join(dir, "boundary.csv"), csv.str());
  std::cout << "invert: " << (j.contains("classification") ? j["classification"]["status"].get<std::string>() : "fixed bc")
            << ", misfit " << best.misfit << ", status " << best.status << " -> " << dir << "\n";
  return 0;
}

int cmd_verify(const Common& c, const std::string& suite) {
  SuiteReport rep = run_suite(suite, [](const Check& k) { std::cout << format_check(k) << std::endl; });
  json checks = json::array();
  bool ok = true;
  for (const Check& k : rep.checks) {
    checks.push_back({{"criterion", k.criterion},
                      {"name", k.name},
                      {"observed", k.observed},
                      {"relation", k.relation},
                      {"tolerance", k.tolerance},
                      {"pass", k.pass},
                      {"known_limitation", k.known_limitation},
                      {"detail", k.detail}});
    ok = ok && k.pass;
  }
  json j = {{"suite", suite}, {"pass", ok}, {"seconds", rep.seconds}, {"checks", checks}};
  std::string dir = out_dir(c, "out");
  write_atomic(join(dir, "verify.json"), j.dump(2) + "\n");
  std::cout << "verify " << suite << ": " << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 4;
}

int report_error(const Error& e) {
  json j = {{"error", e.code()}, {"kind", e.kind() == ErrorKind::config ? "config" : "numerical"}, {"message", e.what()}};
  std::cerr << j.dump() << "\n";
  return e.kind() == ErrorKind::config ? 2 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phaseless interior cavity scattering: forward solves, synthesis, retrieval, inversion"};
  app.require_subcommand(1);
  Common common;
  std::string data, field, suite = "all";
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* s, bool config) {
    if (config) s->add_option("--config", common.config, "experiment config (JSON)");
    s->add_option("--out", common.out, std::string("output directory (overrides ") + kOutEnv + ")");
    s->add_option("--threads", common.threads, "worker thread cap, 0 = all cores")->check(CLI::NonNegativeNumber);
  };
  CLI::App* fwd = app.add_subcommand("forward", "field table for one source on an evaluation grid");
  add_common(fwd, true);
  CLI::App* syn = app.add_subcommand("synthesize", "phaseless dataset from a config");
  add_common(syn, true);
  auto* seed_opt = syn->add_option("--seed", seed, "noise seed (overrides the config)");
  CLI::App* ret = app.add_subcommand("retrieve", "phase retrieval from a dataset");
  add_common(ret, true);
  ret->add_option("--data", data, "dataset JSON")->required();
  CLI::App* inv = app.add_subcommand("invert", "cavity reconstruction from a recovered field");
  add_common(inv, true);
  inv->add_option("--field", field, "retrieval report JSON holding the field")->required();
  CLI::App* ver = app.add_subcommand("verify", "acceptance property suites");
  add_common(ver, false);
  std::vector<std::string> names = suite_names();
  names.push_back("all");
  ver->add_option("--suite", suite, "suite name")->check(CLI::IsMember(names));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  if (*seed_opt) common.seed = seed;
  set_max_threads(common.threads);

  try {
    if (*fwd) return cmd_forward(common);
    if (*syn) return cmd_synthesize(common);
    if (*ret) return cmd_retrieve(common, data);
    if (*inv) return cmd_invert(common, field);
    if (*ver) return cmd_verify(common, suite);
  } catch (const Error& e) {
    return report_error(e);
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error(config_error("io", e.what()));
  }
  return 1;
}
