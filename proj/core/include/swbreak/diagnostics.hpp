#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "swbreak/initial_data.hpp"
#include "swbreak/renormalization.hpp"
#include "swbreak/solver.hpp"
#include "swbreak/transforms.hpp"

namespace swbreak {

// Earliest tau - t at which the forming gradient is still grid-resolved:
// the similarity length (tau - t)^{3/2} must cover >= 20 cells.  lambda
// rescales the cell budget for profiles wider or narrower than the base one.
double resolvable_floor(double dx, double lambda = 1.0);

// Blowup time/location by extrapolating the modulation series to tau - t = 0.
// The fit uses the last resolved decade of tau - t (all resolved records when
// the series spans less than a decade, never fewer than 5); x* follows the
// unwrapped xi at the fitted slope.  Uncertainties are the spread of the
// estimate when the fit is repeated on each half of the fit window.
struct BlowupEstimate {
  double t_star = 0.0;
  double x_star = 0.0;           // folded into the box when the period is known
  double t_uncertainty = 0.0;
  double x_uncertainty = 0.0;
  double window_begin = 0.0;     // earliest t entering the fit
  std::size_t samples = 0;       // records entering the fit
};
// Throws InsufficientDataError (< 5 resolved records) or ExtractionError
// (tau - t fails to decrease: nothing is breaking).
BlowupEstimate estimate_blowup(const std::vector<ModulationRecord>& mods, double floor);

// The blowup-rate product (t* - t) * max|dw/dx| over the resolvable window,
// checked against the two-sided band [1/2, 2] and for snapshot-to-snapshot
// continuity (no jump above 0.05).
struct RateCheck {
  std::vector<double> t, product;
  bool in_band = false;
  bool continuous = false;
  double worst_low = 0.0;        // min of the product series
  double worst_high = 0.0;       // max of the product series
  double max_jump = 0.0;
  double window_begin = 0.0;
};
// Throws InsufficientDataError when no record falls inside the window.
RateCheck rate_check(const std::vector<StepRecord>& recs, double t_star, double floor);

// Holder exponent at the blowup point: least-squares slope of
// log|w(x) - w(x*)| against log|x - x*| over 20 dx <= |x - x*| <= min(1/2, L/8).
struct CuspFit {
  double exponent = 0.0;
  double confidence = 0.0;       // two standard errors of the fitted slope
  double window_lo = 0.0, window_hi = 0.0;
  std::size_t samples = 0;
  std::vector<double> log_r, log_dw;  // the fitted pairs, natural log
};
// Throws InsufficientDataError when the window spans < 1.5 decades.
CuspFit cusp_fit(const RiemannState& state, double x_star);

// sup |W - W_nu| per frame on |y| <= y_cap: the series must eventually
// decrease (monotone over the final unit of s) and end below the threshold.
struct ConvergenceSeries {
  std::vector<double> s, sup;
  bool eventually_decreasing = false;
  bool below_threshold = false;
  double final_sup = 0.0;
  double threshold = 0.0, y_cap = 0.0;
};
// Throws InsufficientDataError on an empty frame list.
ConvergenceSeries convergence_check(const std::vector<SelfSimilarFrame>& frames, double nu,
                                    double threshold = 0.1, double y_cap = 1e3);

// Region taxonomy for the trapped-wave inequality set: near |y| <= ell,
// middle ell <= |y| <= e^{3s/2}/2, far beyond (checked only where the box
// still reaches it), global = all frame nodes, origin = y = 0 only,
// modulation = a bound on the modulation series rather than on fields.
enum class BootstrapRegion { near, middle, far, global, origin, modulation };

struct InequalityRecord {
  std::string id;
  BootstrapRegion region = BootstrapRegion::global;
  double margin = 0.0;     // relaxed threshold minus worst value; pass iff >= 0
  double location = 0.0;   // y (or t for modulation rows) attaining the worst value
  bool pass = false;
  bool region_empty = false;
};

struct BootstrapReport {
  double s = 0.0;
  std::vector<InequalityRecord> records;
  bool all_pass = false;         // over rows whose region is nonempty
  double noise_floor_d4 = 0.0;   // roundoff scale of the 4th-derivative stencils
};

// Evaluates the full inequality set on one frame.  mods is the run's
// modulation series with mods[idx] the record of this frame (the rate rows
// need differences; with fewer than 2 records they are flagged region_empty).
// relax scales every threshold (>1 loosens); the comparator is monotone in it.
// Perturbation rows difference the frame fields against the base profile;
// near-region derivatives come from the uniform patch, outer ones from the
// log grid through the scale-derivative chain rule.  Fourth derivatives on
// the log grid are trusted only outside the patch cover, where the stencil
// noise floor (reported) is far below every threshold.
// Throws DomainError if mods[idx] does not match the frame.
BootstrapReport bootstrap_check(const SelfSimilarFrame& frame,
                                const std::vector<ModulationRecord>& mods, std::size_t idx,
                                const SeedParams& params, double relax = 1.0);

// Characteristic trajectory in the similarity frame: dPhi/ds = V(Phi, s) by
// RK4, V interpolated linearly in s between frames and quintically in y.
enum class VelocityFamily { W, Z };

struct TrajectoryPath {
  std::vector<double> s, phi;     // sampled at frame times
  bool truncated = false;         // left the stored y-range before the last frame
  bool upper_ok = false;          // |phi| <= (|y0| + 8 M delta^{-1/2}) e^{3(s-s0)/2}
  bool lower_applicable = false;  // W family with |y0| >= ell
  bool lower_ok = false;          // |phi| >= |y0| e^{(s-s0)/5}; vacuous when not applicable
  double integral = 0.0;          // int <phi>^{-2/3} ds over the traced span
  bool integral_ok = false;       // <= 10 log(1/ell); vacuous when not applicable
};
// frames/mods must be parallel (same snapshots, ascending s) with spacing
// ds <= 0.1; |y0| must lie inside the first frame.  Throws DomainError.
TrajectoryPath trace_trajectory(const std::vector<SelfSimilarFrame>& frames,
                                const std::vector<ModulationRecord>& mods, double y0,
                                VelocityFamily family, const SeedParams& params);

// Lifespan scaling across a sweep: least-squares slope of log t* against
// log max{eps, beta*}, expected -1.
struct SweepPoint {
  double eps = 0.0;
  double beta_star = 0.0;
  double t_star = 0.0;
};
struct LifespanFit {
  double slope = 0.0, intercept = 0.0;
  bool in_band = false;    // slope within [-1.1, -0.9]
  double max_ratio = 0.0;  // spread of t* * max{eps, beta*} across the sweep
  std::size_t samples = 0;
};
// Throws DomainError on nonpositive entries, InsufficientDataError with
// < 5 points or < 1.5 decades of max{eps, beta*}.
LifespanFit lifespan_regression(const std::vector<SweepPoint>& sweep);

}  // namespace swbreak
