#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace swbreak {

// Stable similarity profile for the focusing transport equation
//   -W/2 + (3y/2 + W) dW/dy = 0,  W(0) = 0, W'(0) = -1,
// i.e. the real root of W^3 + W + y = 0.  Odd in y, monotone decreasing.

// Profile value.  Cancellation-free for all y (cube-root branches are
// recombined through their exact product 1/3 and a series is used near 0).
double eval_profile(double y);

// k-th derivative, k = 0..5, by implicit differentiation of the cubic.
double eval_profile_deriv(double y, int k);

// Member of the rescaled family: W_nu(y) = (nu/6)^{-1/2} W((nu/6)^{1/2} y),
// normalized so the third derivative at the origin equals nu.  nu > 0.
double eval_profile_rescaled(double y, double nu);
double eval_profile_rescaled_deriv(double y, double nu, int k);

// Identity residuals, evaluated exactly as written (for verification).
double profile_cubic_residual(double y);        // W^3 + W + y
double profile_ode_residual(double y);          // -W/2 + (3y/2 + W) W'

// Japanese bracket <y> = sqrt(1 + y^2).
inline double jbracket(double y);

struct BoundCheck {
  std::string name;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;   // min over samples of (allowed - measured); >= 0 means pass
  double worst_y = 0.0;
  bool pass = false;
};

struct BoundReport {
  double y_abs_max = 0.0;
  std::size_t samples = 0;
  std::vector<BoundCheck> checks;       // pointwise decay/monotonicity bounds
  std::array<double, 3> fitted_c345{};  // fitted constants for orders 3,4,5
  double max_cubic_residual = 0.0;            // max |W^3 + W + y|
  double max_cubic_residual_scaled = 0.0;     // max |W^3 + W + y| / max(1, |y|)
  double max_ode_residual = 0.0;              // max |-W/2 + (3y/2 + W) W'|
  bool pass = false;
};

// Evaluate every profile bound on a dense symmetric grid (linear near the
// origin plus log-spaced tails out to |y| = y_abs_max).
BoundReport check_profile_bounds(double y_abs_max = 1.0e4,
                                 std::size_t points_per_decade = 1024);

inline double jbracket(double y) { return std::sqrt(1.0 + y * y); }

}  // namespace swbreak
