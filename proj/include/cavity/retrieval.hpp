#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cavity/common.hpp"
#include "cavity/measurement.hpp"

namespace cavity {

using BoolMat = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Re{u(x_i, z0) conj(u(x_i, z_j))} = (t^2 - r^2 - s^2) / 2
RMat cross_term(const PhaselessDataset& ds);
RMat graze_cross_term(const PhaselessDataset& ds);

struct PhaseDecomposition {
  RVec r;
  RMat s;
  RMat cross;
  RMat cos_delta;   // cross / (r s); unclamped where flagged
  BoolMat mask;     // r s > tau max(r s)
  BoolMat flagged;  // |cos| exceeded 1 by more than the clamp tolerance
  double tau = 1e-6;
  double clamp_tol = 1e-9;

  // |delta| in [0, pi], with flagged entries pinned to the nearest endpoint.
  RMat abs_delta() const;
};

PhaseDecomposition decompose(const PhaselessDataset& ds, double tau = 1e-6, double clamp_tol = 1e-9);

// Sign of sin(delta) propagated by continuity of W = C + i sigma S over the grid,
// best-conditioned entries first. The orientation is fixed so the best
// entry has sign +1. Unmasked entries get 0.
Eigen::MatrixXi continuity_signs(const RMat& C, const RMat& S, const BoolMat& mask);

enum class Branch { direct, conjugate };

struct BranchCandidate {
  Branch tag = Branch::direct;
  CMat field;        // u(x_i, z_j) on masked entries, 0 elsewhere
  BoolMat mask;
  CVec gamma;        // unimodular per-receiver factor e^{i alpha_i}
  CMat graze_field;  // u(x_i, graze_{i,l}), empty without graze data
};

// direct: s exp(i(alpha - sigma |delta|)). conjugate: the complex conjugate of
// direct, i.e. every sign of delta flipped and alpha -> -alpha. Both reproduce
// the three moduli exactly.
std::pair<BranchCandidate, BranchCandidate> build_branches(const PhaseDecomposition& pd,
                                                            const Eigen::MatrixXi& sigma,
                                                            const CVec& anchor);

struct AnchorEstimate {
  CVec gamma;                     // e^{i alpha_i}
  Eigen::MatrixXi graze_sign;     // sign of sin(delta) at each graze level
  RVec residual;                  // relative misfit of the u = Phi + const model
  RVec passive_margin;            // per-receiver phase-match gap between mirror choices
  CMat graze_field;               // anchored graze values
};

// Fits u(x_i, graze_l) = Phi(x_i, graze_l) + a_i over the graze levels for
// every sign pattern. Needs at least two levels; throws
// numerical_error("anchor_unavailable") otherwise.
AnchorEstimate anchor_from_graze(const PhaselessDataset& ds, double clamp_tol = 1e-9);

// Phase mismatch between candidate graze values and Phi, relative to the phase
// of Phi: sum |arg(u_g / Phi_g)| / sum |arg Phi_g|. The true field tends to 0 as
// the graze distance shrinks, its conjugate to 2.
double graze_score(const BranchCandidate& c, const PhaselessDataset& ds);
// Mean |arg Phi_g| over graze pairs; converts radians to score units.
double graze_phase_scale(const PhaselessDataset& ds);

enum class Selection { direct, conjugate, undetermined };
std::string to_string(Selection s);

struct RetrievalReport {
  Selection selected = Selection::undetermined;
  double margin = 0;
  double score_direct = 0, score_conjugate = 0;
  double noise_floor = 0;  // score units
  double phase_gap = 0;    // score gap in radians
  bool anchored = false;
  std::string status;
  RVec anchor_residuals;
  double orientation_ratio = 0;  // regular-fit misfit, rejected / kept orientation
  int flagged = 0, ambiguous = 0;
  double mask_fraction = 0;
  BranchCandidate direct, conjugate;
  CMat field;  // selected candidate (direct when undetermined)
  std::optional<double> oracle_error;
};

// Selector alone: lower graze score wins; undetermined when the gap is below
// ten times noise_floor (score units).
RetrievalReport select_branch(const BranchCandidate& a, const BranchCandidate& b,
                              const PhaselessDataset& ds, double noise_floor);

struct RetrievalOptions {
  double tau = 1e-6;
  double clamp_tol = 1e-9;
  int regular_order = 4;  // |n| cutoff of the regular expansion used to orient the sign field
};

RetrievalReport retrieve(const PhaselessDataset& ds, const RetrievalOptions& opt = {},
                         const GridFields* oracle = nullptr);

// max |u_hat - u| / max |u| over masked entries.
double field_error(const CMat& estimate, const CMat& truth, const BoolMat& mask);

struct UniquenessReport {
  double dr = 0, ds = 0, dt = 0;  // sup-norm discrepancies of the three datasets
  double scale = 0;               // max modulus over both datasets
  bool distinguishable = false;
};

UniquenessReport verify_uniqueness_steps(const PhaselessDataset& a, const PhaselessDataset& b,
                                         double tol_rel = 1e-3);
// Synthesizes both datasets on the shared grid first.
UniquenessReport verify_uniqueness_steps(const ScatteringConfig& a, const ScatteringConfig& b,
                                         const MeasurementGrid& grid, double tol_rel = 1e-3);

}  // namespace cavity
