#pragma once

#include <string>
#include <utility>
#include <vector>

#include "swbreak/grid.hpp"
#include "swbreak/transforms.hpp"

namespace swbreak {

// Largeness/smallness parameters of the constructed blowup seed.
struct SeedParams {
  double M = 100.0;     // largeness parameter
  double delta = 0.05;  // smallness parameter, in (0, 1)
  double kappa0 = 3.0;  // initial amplitude; 3 sqrt(H) anchors depth H

  double s0() const { return -std::log(delta); }
  double ell() const {
    const double lm = std::log(M);
    return 1.0 / (lm * lm);
  }
  // Desk-scale window: smaller delta makes the physical slope 1/delta
  // unresolvable on affordable grids.
  void validate() const;
};

// Even C^inf cutoff: 1 on [-1/2, 1/2], 0 outside (-1, 1), exponential glue
// between.  Returns the k-th derivative, k = 0..5.
double glue_cutoff(double r, int k = 0);

struct SeedOptions {
  double far_scale = 0.0;  // cutoff scale; 0 selects the smallest admissible one
  double bump_amp = 0.0;   // odd origin bump amp*y^3*exp(-y^2/4) inside the cutoff
  double z_amp = -1.0;     // amplitude of Z0; < 0 selects min(M*delta/4, 1/4)
  // extra (amp, center) bumps amp*y^3*exp(-(y-center)^2/4) for robustness probes
  std::vector<std::pair<double, double>> extra_bumps;
};

// Analytic seed in self-similar variables at s = s0:
//   W0(y) = (Wbar(y) + bumps(y)) * cutoff(y/far_scale)
//   Z0(y) = z_amp * sech^2(delta^{3/2} y) * cutoff(y/far_scale)
// All derivatives to order 5 are closed-form (jet arithmetic inside).
class SelfSimilarSeed {
 public:
  SelfSimilarSeed(const SeedParams& params, const SeedOptions& opts = {});

  double W0(double y) const { return W0_deriv(y, 0); }
  double W0_deriv(double y, int k) const;
  double Z0(double y) const { return Z0_deriv(y, 0); }
  double Z0_deriv(double y, int k) const;
  // Wtilde0 = W0 - Wbar
  double Wtilde0_deriv(double y, int k) const;

  const SeedParams& params() const { return params_; }
  double far_scale() const { return far_scale_; }
  double z_amp() const { return z_amp_; }
  double bump_amp() const { return bump_amp_; }
  // Support radius in physical x: far_scale * delta^{3/2}.
  double support_x() const;

 private:
  double bumps_deriv(double y, int k) const;
  SeedParams params_;
  double far_scale_ = 0.0;
  double bump_amp_ = 0.0;
  double z_amp_ = 0.0;
  std::vector<std::pair<double, double>> extra_bumps_;
};

// One admissibility inequality evaluated on its region grid.
struct SeedCheck {
  std::string id;      // e.g. "near_value", "far_slope", "z_sup"
  std::string region;  // "origin", "near", "middle", "far", "global"
  double threshold = 0.0;
  double worst_value = 0.0;   // max |measured| over the region
  double worst_y = 0.0;
  double margin = 0.0;        // threshold - worst_value
  bool pass = false;
};

struct SeedReport {
  std::vector<SeedCheck> checks;
  bool pass = false;
};

// Evaluate every admissibility inequality of the construction on
// region-adapted grids.  Reporting only; never throws on violations.
SeedReport verify_seed(const SelfSimilarSeed& seed);

// Physical Riemann data at t0 = -delta on grid g:
//   w0(x) = sqrt(delta) W0(x delta^{-3/2}) + kappa0, z0(x) = Z0(x delta^{-3/2}).
// Throws ConstructionError if the grid cannot contain the seed support or
// the data touch vacuum.
RiemannState seed_to_riemann(const SelfSimilarSeed& seed, const Grid& g);

// Full translation to surface/velocity variables (requires eps > 0); asserts
// non-cavitation through the to_depth checks.
PhysicalState seed_to_physical(const SelfSimilarSeed& seed, const Grid& g, const Topography& topo,
                               const ModelParams& p);

}  // namespace swbreak
