#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cavity/forward.hpp"
#include "cavity/inverse.hpp"
#include "cavity/measurement.hpp"
#include "cavity/retrieval.hpp"

namespace cavity {

struct ArcSpec {
  Point center = Point::Zero();
  double radius = 1;
  double theta0 = 0, theta1 = kPi;
};

struct GridSpec {
  ArcSpec sigma, gamma;
  Point z0 = Point::Zero();
  int receivers = 64;
  int sources = 32;
  std::optional<double> graze_eps_rel = 1e-3;  // graze distance / diam(D); none disables graze data
  std::vector<double> graze_levels{1.0, 0.25, 0.0625};
};

struct InversionSpec {
  int q = 6;
  std::optional<Point> center;  // star center; the ball center when absent
  double initial_radius = 1;
  double alpha = -1;
  int max_iter = 30;
  bool continuation = true;
  bool classify = true;  // run both BC hypotheses
};

struct EvalSpec {
  Point source = Point::Zero();
  Point lower = Point(-1, -1), upper = Point(1, 1);
  int nx = 41, ny = 41;
};

struct ExperimentConfig {
  ScatteringConfig scattering;
  GridSpec grid;
  double noise = 0;
  std::uint64_t seed = 0;
  RetrievalOptions retrieval;
  InversionSpec inversion;
  EvalSpec forward;
  std::string output = "out";
};

inline constexpr int kConfigVersion = 1;

// Strict parse: unknown keys, wrong types and a missing or newer version are
// config errors naming the offending field. Nesting checks run at load time.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string dump_config(const ExperimentConfig& cfg);

MeasurementGrid make_grid(const ExperimentConfig& cfg);
StarShapeParam initial_shape(const ExperimentConfig& cfg);

// Default geometry: circle cavity R = 2, k = 2, off-centre impedance ball.
ExperimentConfig default_config();

}  // namespace cavity
