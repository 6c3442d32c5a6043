#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "swbreak/grid.hpp"
#include "swbreak/topography.hpp"

namespace swbreak {

// Physical model parameters for the shallow water system.
struct ModelParams {
  double H = 1.0;          // rest depth
  double eps = 0.0;        // amplitude parameter, in [0, 1]
  double beta_star = 0.0;  // topography parameter, in [0, 1]
  double h_min = 0.1;      // non-cavitation floor

  void validate() const;   // throws DomainError on violation
};

// Surface elevation / velocity fields at one instant.
struct PhysicalState {
  Grid grid;
  std::vector<double> zeta, vbar;
  double t = 0.0;

  PhysicalState(const Grid& g, double time = 0.0)
      : grid(g), zeta(g.n, 0.0), vbar(g.n, 0.0), t(time) {}
};

// Depth / velocity fields (h, u) — intermediate representation.
struct DepthState {
  Grid grid;
  std::vector<double> h, u;
  double t = 0.0;

  DepthState(const Grid& g, double time = 0.0) : grid(g), h(g.n, 0.0), u(g.n, 0.0), t(time) {}
};

// Riemann invariant fields (w, z) — the solver's working representation.
struct RiemannState {
  Grid grid;
  std::vector<double> w, z;
  double t = 0.0;

  RiemannState(const Grid& g, double time = 0.0) : grid(g), w(g.n, 0.0), z(g.n, 0.0), t(time) {}
};

// h = H + eps*zeta - beta_star*b, u = eps*vbar.  Throws AdmissibilityError
// (naming the worst node) if h <= h_min anywhere.
DepthState to_depth(const PhysicalState& state, const Topography& topo, const ModelParams& p);

// sigma = 2 sqrt(h), w = (3/4)(u + sigma), z = (3/4)(u - sigma).
RiemannState to_riemann(const DepthState& state);

// u = (2/3)(w + z), sigma = (2/3)(w - z), h = sigma^2/4.  Throws DomainError
// on vacuum (w - z <= 0).
DepthState from_riemann(const RiemannState& state);

// Inverse of to_depth: zeta = (h - H + beta_star*b)/eps, vbar = u/eps.
// Requires eps > 0.
PhysicalState to_physical(const DepthState& state, const Topography& topo, const ModelParams& p);

// Discrete homogeneous Sobolev seminorm |f|_{H^k} on the periodic grid via
// spectral differentiation: |f|^2 = L * sum_m (2 pi m / L)^{2k} |c_m|^2.
// Exact for band-limited fields.  k = 0..6.
double sobolev_seminorm(const std::vector<double>& field, int order, const Grid& g);

// Lifespan-scaling probe: for fixed shapes (zeta0, vbar0, b), evaluate the
// H^5 seminorm of the transformed data (w0, z0) across (eps, beta_star)
// pairs and compare it to max(eps, beta_star).
struct ScalingRow {
  double eps = 0.0;
  double beta_star = 0.0;
  double seminorm = 0.0;  // sqrt(|w0|_{H^5}^2 + |z0|_{H^5}^2), means removed
  double ratio = 0.0;     // seminorm / max(eps, beta_star)
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  double ratio_spread = 0.0;  // max ratio / min ratio over nonzero pairs
  bool pass = false;          // ratio_spread < 3
};

ScalingReport moser_scaling_check(const std::vector<double>& zeta0,
                                  const std::vector<double>& vbar0, const Topography& topo,
                                  const Grid& g,
                                  const std::vector<std::pair<double, double>>& eps_beta_pairs,
                                  const ModelParams& base);

}  // namespace swbreak
