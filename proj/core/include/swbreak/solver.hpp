#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "swbreak/grid.hpp"
#include "swbreak/topography.hpp"
#include "swbreak/transforms.hpp"

namespace swbreak {

// Explicit method-of-lines integrator for the diagonal system
//   dw/dt + (w + z/3) dw/dx = -(3/4) beta* db/dx
//   dz/dt + (w/3 + z) dz/dx = -(3/4) beta* db/dx
// on a periodic grid: classic RK4 in time, 5th-order upwind-biased
// differences in space with per-node, per-equation upwinding.
struct SolverConfig {
  double cfl = 0.4;  // dt = cfl * dx / max|speed|
  double t_end = std::numeric_limits<double>::infinity();
  // Stop once min dw/dx <= -stop_slope_factor/dx: beyond that the grid
  // cannot represent the forming gradient.
  double stop_slope_factor = 0.05;
  std::size_t max_steps = 50'000'000;

  void validate() const;  // throws DomainError on nonsense
};

// Per-step diagnostics, computed on every accepted state.
struct StepRecord {
  std::size_t step = 0;
  double t = 0.0;
  double dt = 0.0;         // size of the step that produced this state (0 at step 0)
  double min_slope = 0.0;  // min over nodes of dw/dx (4th-order central)
  double argmin_x = 0.0;   // x of the minimizing node
  double max_speed = 0.0;  // max over nodes/equations of |transport speed|
  double mass = 0.0;       // sum (w - z)^2/9 dx, the fluid area
  double min_gap = 0.0;    // min (w - z); vacuum when <= 0
};

enum class StopReason { slope_threshold, time_cap, step_cap, observer };

struct SolveResult {
  RiemannState state;
  StepRecord final_record;
  StopReason reason = StopReason::time_cap;
  std::size_t steps = 0;
};

// Called after every accepted step (including the initial state at step 0);
// return false to stop the run.
using StepObserver = std::function<bool(const RiemannState&, const StepRecord&)>;

// Integrate until a stop condition fires.  Throws SolverError on vacuum
// (min(w - z) <= 0) or non-finite values.
SolveResult solve(RiemannState initial, const Topography& topo, const ModelParams& params,
                  const SolverConfig& config, const StepObserver& observer = {});

// 4th-order central first derivative of a periodic field.
std::vector<double> slope_field(const std::vector<double>& f, const Grid& g);

// Exact solution of du/dt + u du/dx = 0 at (x, t) by bisection on the
// characteristic relation x0 + t*u0(x0) = x.  u0 must be defined for all
// real arguments and take values in [u_min, u_max]; valid for t before the
// first characteristic crossing.
double burgers_exact(const std::function<double(double)>& u0, double x, double t, double u_min,
                     double u_max);

}  // namespace swbreak
