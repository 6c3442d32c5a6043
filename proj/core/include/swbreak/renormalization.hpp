#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "swbreak/topography.hpp"
#include "swbreak/transforms.hpp"

namespace swbreak {

// Modulation state read off a single physical snapshot.  The steepest point
// pins all three variables: xi is the subgrid argmin of dw/dx (3-point
// parabolic fit on the 5-point differenced slope field), kappa = w(xi), and
// the fitted minimum slope m sets tau - t = -1/m.  s = -log(tau - t) is
// stored once here and is the authoritative value for all frame scalings
// (tau - t recomputed from the fields may differ by roundoff).
struct ModulationRecord {
  double t = 0.0;
  double kappa = 0.0;
  double tau = 0.0;
  double xi = 0.0;
  double s = 0.0;
  double vertex_slope = 0.0;   // fitted min of dw/dx; tau - t = -1/vertex_slope
  double domain_length = 0.0;  // box period; lets xi be differenced across wraps
};

// Throws ExtractionError if the slope minimum is nonnegative (nothing is
// steepening yet), not locally quadratic, or within 3 cells of the box edge.
// Exact ties between equal minima break toward prev_xi to keep xi(t)
// continuous across snapshots.
ModulationRecord extract_modulation(const RiemannState& state,
                                    std::optional<double> prev_xi = {});

// Layout of the similarity-frame grid: a symmetric log-spaced grid plus a
// uniform patch across the origin for centered derivative stencils.
struct FrameOptions {
  double y_min = 1e-3;          // innermost log node
  int nodes_per_decade = 64;
  double y_max = 0.0;           // 0 = box limit e^{3s/2} L/4
  double patch_half_width = 3.2;
  double patch_step = 0.05;
  void validate() const;        // throws DomainError
};

// One snapshot rescaled to similarity variables:
//   y = (x - xi) e^{3s/2},  W(y) = e^{s/2}(w(x) - kappa),  Z(y) = z(x),
//   B(y) = db/dx at x(y).
// The patch is clamped to sit well inside the periodic box at early s (the
// truncated flag records any clamping of the requested coverage).
struct SelfSimilarFrame {
  std::vector<double> y, W, Z, B;  // log grid, ascending, zero excluded
  std::vector<double> py, pW, pZ;  // uniform patch; py[patch_half_count] = 0
  double patch_step = 0.0;
  std::size_t patch_half_count = 0;
  double y_min = 0.0;              // layout provenance, for exact resampling
  int nodes_per_decade = 0;
  double s = 0.0;
  double t_source = 0.0;
  double kappa = 0.0, tau = 0.0, xi = 0.0;
  double origin_slope = 0.0;       // (tau - t) * vertex slope; -1 by construction
  bool truncated = false;
};

// mod must come from the same snapshot.  W(0) = 0 holds exactly (the center
// node reuses the interpolation that defined kappa).
SelfSimilarFrame to_frame(const RiemannState& state, const ModulationRecord& mod,
                          const Topography& topo, const FrameOptions& opts = {});

// Interpolate a stored frame onto a new layout (quintic, exact pass-through
// at coinciding nodes, so resampling with the same layout is the identity).
// Throws ExtractionError if the target grid extends beyond the source.
SelfSimilarFrame resample_frame(const SelfSimilarFrame& f, const FrameOptions& opts);

// Derivatives of W and Z at y = 0, measured by centered stencils on the
// patch.  The stencil spacing adapts to the measured profile scale (balance
// of truncation bias against interpolation-noise amplification); `spacing`
// records the step actually used.  W1 is the re-measured slope; the frame's
// origin_slope carries the constructed value.
struct OriginJets {
  double W0 = 0, W1 = 0, W2 = 0, W3 = 0, W4 = 0;
  double Z0 = 0, Z1 = 0, Z2 = 0;
  double spacing = 0;
};
OriginJets origin_jets(const SelfSimilarFrame& f);

// Third y-derivative of W at the origin (same adaptive stencil).
double frame_third_derivative(const SelfSimilarFrame& f);

// Node stride realizing that adaptive spacing: centered stencils on the
// uniform patch should step this many nodes per arm, not one.  The patch is
// resampled from a coarser source, so unit-stride high derivatives amplify
// interpolation noise by the oversampling factor to the 3rd-4th power.
std::size_t frame_stencil_stride(const SelfSimilarFrame& f);

// Limit of the origin third derivative over an ordered frame sequence.
// nu = value at the last frame; uncertainty = net drift over the final unit
// of s; counter_drift = total movement against the net trend (reliability:
// counter-trend noise must not exceed the drift).
struct NuEstimate {
  double nu = 0.0;
  double uncertainty = 0.0;
  double counter_drift = 0.0;
  bool reliable = false;
};
// Requires >= 3 frames spanning >= 1 unit of s (InsufficientDataError).
NuEstimate estimate_nu(const std::vector<SelfSimilarFrame>& frames);

// Centered difference quotients of the modulation series (one-sided at the
// ends) and beta_tau = 1/(1 - tau_dot).  Requires >= 2 records.
struct ModulationRates {
  std::vector<double> t, s;
  std::vector<double> kappa_dot, tau_dot, xi_dot, beta_tau;
};
ModulationRates modulation_rates(const std::vector<ModulationRecord>& mods);

// Transport velocities on the frame grids:
//   V_W = (3/2)y + beta_tau W + G_W,   G_W = e^{s/2} beta_tau (kappa + Z/3 - xi_dot),
//   V_Z = (3/2)y + (1/3) beta_tau W + G_Z, G_Z = e^{s/2} beta_tau (kappa/3 + Z - xi_dot).
// rates[idx] must correspond to the frame's source snapshot.
struct TransportVelocities {
  std::vector<double> vW, vZ;    // on the log grid
  std::vector<double> pvW, pvZ;  // on the patch
  double beta_tau = 0.0;
  double G_W0 = 0.0;             // G_W at y = 0; equals V_W(0) since W(0) = 0
  double tau_dot = 0.0, xi_dot = 0.0;
};
TransportVelocities transport_velocities(const SelfSimilarFrame& f,
                                         const ModulationRates& rates,
                                         std::size_t idx);

// Residuals of the three rate relations forced by keeping the origin pins
// (W(0) = 0, dW(0) = -1, d2W(0) = 0) along the flow:
//   kappa_dot = e^s (kappa + Z(0)/3 - xi_dot) - (3/4) beta* B(0)
//   tau_dot   = e^{s/2} dZ(0)/3 - (3/4) beta* e^{-2s} b''(xi)
//   xi_dot    = kappa + Z(0)/3 - (d2Z(0)/3 - (3/4) beta* e^{-4s} b'''(xi)) / d3W(0)
// (the last uses the curvature-preservation identity, which fixes G_W(0)
// without reusing xi_dot).  Measured rates are centered differences; output
// covers interior records only.
struct ModulationResiduals {
  std::vector<double> s;
  std::vector<double> kappa_res, tau_res, xi_res;
};
ModulationResiduals modulation_residuals(const std::vector<ModulationRecord>& mods,
                                         const std::vector<SelfSimilarFrame>& frames,
                                         const Topography& topo, double beta_star);

// Relative mismatch between the differenced ds/dt and (1 - tau_dot)/(tau - t)
// at interior records.
std::vector<double> s_rate_residuals(const std::vector<ModulationRecord>& mods);

// sup |W - W_nu| over all frame nodes with |y| <= y_abs_max, where W_nu is
// the rescaled similarity profile with origin third derivative nu.
double frame_sup_deviation(const SelfSimilarFrame& f, double nu, double y_abs_max);

}  // namespace swbreak
