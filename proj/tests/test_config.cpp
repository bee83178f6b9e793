#include "doctest.h"

#include "cavity/config.hpp"

using namespace cavity;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config takes the defaults") {
  ExperimentConfig c = parse_config(R"({"version": 1})");
  ExperimentConfig d = default_config();
  CHECK(c.scattering.k == d.scattering.k);
  CHECK(c.grid.receivers == d.grid.receivers);
  REQUIRE(c.scattering.ball);
  CHECK(c.scattering.ball->lambda0 == d.scattering.ball->lambda0);
  CHECK(make_grid(c).n_receivers() == d.grid.receivers);
}

TEST_CASE("explicit fields override the defaults") {
  ExperimentConfig c = parse_config(R"({
    "version": 1, "k": 1.5,
    "cavity": {"kind": "kite", "center": [0.4, 0], "scale": 1.8},
    "bc": {"kind": "impedance", "lambda": [1.0, 0.5]},
    "ball": {"center": [-0.6, 0], "radius": 0.3, "lambda0": 1.0},
    "grid": {"sigma": {"center": [0.5, 0], "radius": 0.6, "theta0": -1.5, "theta1": 1.5},
             "gamma": {"center": [0.5, 0], "radius": 0.3, "theta0": -1.5, "theta1": 1.5},
             "z0": [-0.3, 0.8], "receivers": 10, "sources": 5, "graze": null},
    "noise": 0.01, "seed": 3
  })");
  CHECK(c.scattering.k == 1.5);
  CHECK(c.scattering.cavity.kind() == CurveKind::kite);
  CHECK(c.scattering.bc.kind == BcKind::impedance);
  CHECK(c.scattering.bc.c0 == cplx(1.0, 0.5));
  CHECK(!c.grid.graze_eps_rel);
  CHECK(c.noise == 0.01);
  CHECK(c.seed == 3);
}

TEST_CASE("unknown and mistyped fields are named") {
  CHECK(error_of(R"({"version": 1, "wavenumber": 2})").find("'wavenumber'") != std::string::npos);
  CHECK(error_of(R"({"version": 1, "ball": {"radius": 0.3, "colour": 1}})").find("'ball.colour'") !=
        std::string::npos);
  CHECK(error_of(R"({"version": 1, "k": "two"})").find("'k'") != std::string::npos);
  CHECK(error_of(R"({"version": 1, "grid": {"receivers": 2.5}})").find("'grid.receivers'") !=
        std::string::npos);
  CHECK(error_of(R"({"version": 1, "cavity": {"kind": "blob"}})").find("cavity.kind") != std::string::npos);
  CHECK(!error_of("{ not json").empty());
}

TEST_CASE("version is required and checked") {
  CHECK(error_of(R"({"k": 2})").find("'version'") != std::string::npos);
  CHECK(error_of(R"({"version": 7})").find("unsupported") != std::string::npos);
}

TEST_CASE("geometry violations surface at load") {
  // Sigma circle reaching outside the cavity.
  CHECK(!error_of(R"({"version": 1, "grid": {"sigma": {"center": [0, 0.45], "radius": 1.5,
        "theta0": 0, "theta1": 3.14}}})")
             .empty());
  // Region too large for the wavenumber.
  CHECK(error_of(R"({"version": 1, "k": 4})").find("pi/k") != std::string::npos);
}

TEST_CASE("dump and parse round-trip") {
  ExperimentConfig c = default_config();
  c.scattering.bc = BoundaryCondition::impedance(cplx(0.7, 0.1));
  c.scattering.bc.cos_coef = {cplx(0.1, 0)};
  c.noise = 0.002;
  c.inversion.q = 4;
  std::string text = dump_config(c);
  ExperimentConfig back = parse_config(text);
  CHECK(dump_config(back) == text);
  CHECK(back.scattering.bc.cos_coef.size() == 1);
}

TEST_CASE("null ball removes the ball") {
  ExperimentConfig c = parse_config(R"({"version": 1, "ball": null})");
  CHECK(!c.scattering.ball);
}
