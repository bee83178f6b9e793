#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cavity/common.hpp"
#include "cavity/forward.hpp"
#include "cavity/geometry.hpp"

namespace cavity {

struct GrazeSpec {
  double eps = 0;                             // absolute distance for level 1
  std::vector<double> levels{1.0, 0.25, 0.0625};  // multipliers of eps
};

// Receivers on Sigma (arc of dG), sources on Gamma (arc of dOmega), the reference
// source z0 and optional graze sources x_i - eps*l*n_i next to every receiver.
struct MeasurementGrid {
  AdmissiblePair sigma, gamma;
  std::vector<Point> receivers, receiver_normals, sources;
  Point z0 = Point::Zero();
  double eps = 0;
  std::vector<double> levels;
  std::vector<std::vector<Point>> graze;  // [receiver][level], empty without graze data

  int n_receivers() const { return int(receivers.size()); }
  int n_sources() const { return int(sources.size()); }
  int n_levels() const { return graze.empty() ? 0 : int(levels.size()); }
  bool has_graze() const { return !graze.empty(); }
};

MeasurementGrid build_grid(const ScatteringConfig& cfg, const AdmissiblePair& sigma,
                           const AdmissiblePair& gamma, const Point& z0, int n_receivers,
                           int n_sources, const std::optional<GrazeSpec>& graze);

struct NoiseSpec {
  double level = 0;
  std::uint64_t seed = 0;
};

struct PhaselessDataset {
  double k = 0;
  MeasurementGrid grid;
  RVec r;      // |u(x_i, z0)|
  RMat s, t;   // |u(x_i, z_j)|, |u(x_i, z0) + u(x_i, z_j)|
  RMat gs, gt; // same for graze sources, [receiver][level]
  NoiseSpec noise;
};

// Complex fields on the grid (the ground truth behind a dataset).
struct GridFields {
  CVec u0;  // u(x_i, z0)
  CMat U;   // u(x_i, z_j)
  CMat G;   // u(x_i, graze_{i,l})
};

GridFields compute_fields(const Solver& solver, const MeasurementGrid& grid);
// Moduli of u1, u2 and u1 + u2, taken after the complex sum.
PhaselessDataset moduli(const GridFields& f, const MeasurementGrid& grid, double k);
PhaselessDataset synthesize(const ScatteringConfig& cfg, const MeasurementGrid& grid);

PhaselessDataset add_noise(const PhaselessDataset& ds, double level, std::uint64_t seed);

void save(const PhaselessDataset& ds, const std::string& path);
PhaselessDataset load(const std::string& path);

// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace cavity
