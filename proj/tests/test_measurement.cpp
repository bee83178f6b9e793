#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cavity/measurement.hpp"

using namespace cavity;

namespace {

ScatteringConfig scene() {
  ScatteringConfig c;
  c.k = 2;
  c.cavity = ClosedCurve::circle(Point::Zero(), 2);
  c.ball = ReferenceBall{Point(0, -1.3), 0.45, 2.0};
  c.n_D = 128;
  c.n_B = 64;
  return c;
}

MeasurementGrid grid(const ScatteringConfig& c, int nr = 12, int ns = 6, bool graze = true) {
  auto sig = make_admissible(c.k, Point(0, 0.45), 1.1, 0, kPi);
  auto gam = make_admissible(c.k, Point(0, 0.45), 0.6, 0, kPi);
  std::optional<GrazeSpec> g;
  if (graze) g = GrazeSpec{1e-3 * c.cavity.diameter(), {1.0, 0.25, 0.0625}};
  return build_grid(c, sig, gam, Point(-1.5, -0.6), nr, ns, g);
}

std::string tmpfile(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("cavity_test_" + name)).string();
}

}  // namespace

TEST_CASE("grid layout") {
  ScatteringConfig c = scene();
  MeasurementGrid g = grid(c);
  REQUIRE(g.n_receivers() == 12);
  REQUIRE(g.n_sources() == 6);
  REQUIRE(g.n_levels() == 3);
  for (int i = 0; i < g.n_receivers(); ++i) {
    CHECK(std::abs((g.receivers[i] - Point(0, 0.45)).norm() - 1.1) < 1e-12);
    CHECK(std::abs(g.receiver_normals[i].norm() - 1) < 1e-12);
    for (int l = 0; l < 3; ++l)
      CHECK(std::abs((g.graze[i][l] - g.receivers[i]).norm() - g.eps * g.levels[l]) < 1e-14);
  }
  for (const Point& z : g.sources) CHECK(std::abs((z - Point(0, 0.45)).norm() - 0.6) < 1e-12);
}

TEST_CASE("grid rejections") {
  ScatteringConfig c = scene();
  auto sig = make_admissible(c.k, Point(0, 0.45), 1.1, 0, kPi);
  auto gam = make_admissible(c.k, Point(0, 0.45), 0.6, 0, kPi);
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return std::string("none");
  };
  // Omega not inside G
  auto big = make_admissible(c.k, Point(0, 0.45), 1.2, 0, kPi);
  CHECK(code([&] { build_grid(c, sig, big, Point(-1.5, -0.6), 4, 4, {}); }) == "nesting_violation");
  // G leaves the cavity
  auto out = make_admissible(c.k, Point(0.8, 0.45), 1.3, 0, kPi);
  CHECK(code([&] { build_grid(c, out, gam, Point(-1.5, -0.6), 4, 4, {}); }) == "nesting_violation");
  // G meets the ball
  auto low = make_admissible(c.k, Point(0, -0.2), 1.1, 0, kPi);
  auto low_g = make_admissible(c.k, Point(0, -0.2), 0.5, 0, kPi);
  CHECK(code([&] { build_grid(c, low, low_g, Point(-1.5, -0.6), 4, 4, {}); }) == "nesting_violation");
  CHECK(code([&] { build_grid(c, sig, gam, Point(0, -1.3), 4, 4, {}); }) == "invalid_z0");
  CHECK(code([&] { build_grid(c, sig, gam, Point(0.6, 0.45), 4, 4, {}); }) == "invalid_z0");
  CHECK(code([&] { build_grid(c, sig, gam, Point(-1.5, -0.6), 0, 4, {}); }) == "invalid_counts");
  CHECK(code([&] { build_grid(c, sig, gam, Point(-1.5, -0.6), 4, 4, GrazeSpec{0.5, {1}}); }) ==
        "invalid_graze");
  CHECK(code([&] { build_grid(c, sig, gam, Point(-1.5, -0.6), 4, 4, GrazeSpec{1e-3, {1.5}}); }) ==
        "invalid_graze");
  CHECK(code([&] { make_admissible(2, Point::Zero(), 1.6, 0, 1); }) == "admissibility_violation");
}

TEST_CASE("moduli obey the triangle inequality and match the fields") {
  ScatteringConfig c = scene();
  MeasurementGrid g = grid(c);
  Solver s(c);
  GridFields f = compute_fields(s, g);
  PhaselessDataset ds = moduli(f, g, c.k);
  for (int i = 0; i < g.n_receivers(); ++i) {
    CHECK(std::abs(ds.r(i) - std::abs(total_field(s.solve(g.z0), g.receivers[i]))) < 1e-12);
    for (int j = 0; j < g.n_sources(); ++j) {
      CHECK(ds.t(i, j) <= ds.r(i) + ds.s(i, j) + 1e-12);
      CHECK(ds.t(i, j) >= std::abs(ds.r(i) - ds.s(i, j)) - 1e-12);
      CHECK(std::abs(ds.t(i, j) - std::abs(f.u0(i) + f.U(i, j))) < 1e-14 * (1 + ds.t(i, j)));
    }
    for (int l = 0; l < g.n_levels(); ++l) CHECK(ds.gt(i, l) <= ds.r(i) + ds.gs(i, l) + 1e-12);
  }
}

TEST_CASE("noise is deterministic, bounded and clamped") {
  ScatteringConfig c = scene();
  MeasurementGrid g = grid(c, 6, 4, false);
  PhaselessDataset ds = synthesize(c, g);
  PhaselessDataset a = add_noise(ds, 0.01, 7), b = add_noise(ds, 0.01, 7), d = add_noise(ds, 0.01, 8);
  CHECK((a.s - b.s).norm() == 0);
  CHECK((a.s - d.s).norm() > 0);
  CHECK(((a.s - ds.s).array().abs() <= 0.01 * ds.s.array() + 1e-15).all());
  PhaselessDataset huge = add_noise(ds, 5.0, 3);
  CHECK((huge.t.array() >= 0).all());
  CHECK((add_noise(ds, 0, 1).t - ds.t).norm() == 0);
  CHECK_THROWS_AS(add_noise(ds, -0.1, 1), Error);
}

TEST_CASE("dataset round-trips through JSON") {
  ScatteringConfig c = scene();
  MeasurementGrid g = grid(c, 5, 3, true);
  PhaselessDataset ds = add_noise(synthesize(c, g), 1e-3, 42);
  std::string path = tmpfile("roundtrip.json");
  save(ds, path);
  PhaselessDataset back = load(path);
  CHECK(back.k == ds.k);
  CHECK((back.r - ds.r).norm() == 0);
  CHECK((back.s - ds.s).norm() == 0);
  CHECK((back.t - ds.t).norm() == 0);
  CHECK((back.gs - ds.gs).norm() == 0);
  CHECK((back.gt - ds.gt).norm() == 0);
  CHECK(back.grid.n_levels() == 3);
  CHECK(back.noise.seed == 42);
  CHECK((back.grid.z0 - ds.grid.z0).norm() == 0);
  std::filesystem::remove(path);
}

TEST_CASE("malformed datasets name the offending field") {
  ScatteringConfig c = scene();
  PhaselessDataset ds = synthesize(c, grid(c, 4, 3, false));
  std::string path = tmpfile("bad.json");
  save(ds, path);
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  in.close();
  auto pos = text.find("\"k\":");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 4, "\"k\": \"two\", \"kk\":");
  {
    std::ofstream o(path);
    o << text;
  }
  try {
    load(path);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == "dataset_parse");
    CHECK(std::string(e.what()).find("'k'") != std::string::npos);
  }
  {
    std::ofstream o(path);
    o << "{ not json";
  }
  CHECK_THROWS_AS(load(path), Error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load(path), Error);
}
