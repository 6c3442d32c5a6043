#include "swbreak/profile.hpp"

#include <algorithm>
#include <cmath>

#include "swbreak/errors.hpp"

namespace swbreak {

namespace {

// Cardano root of W^3 + W + y = 0 for y > 0, written so the two cube-root
// branches never cancel: with R = sqrt(1/27 + y^2/4) and B = cbrt(y/2 + R),
// the identity (R - y/2)(R + y/2) = 1/27 gives cbrt(R - y/2) = 1/(3B), so
//   W = 1/(3B) - B
// stays fully accurate as y -> inf.  A single Newton polish removes the
// last ulp of noise from the recombination.
double cardano_positive(double y) {
  const double r = std::sqrt(1.0 / 27.0 + 0.25 * y * y);
  const double b = std::cbrt(0.5 * y + r);
  double w = 1.0 / (3.0 * b) - b;
  const double d = 1.0 + 3.0 * w * w;
  w -= ((w * w * w + w) + y) / d;
  return w;
}

// Odd series W = -y + y^3 - 3 y^5 + 12 y^7 + O(y^9); below |y| = 3e-3 the
// truncation error (~55 y^9) is far under one ulp of W, while the closed
// form would lose ~y^{-1} relative digits to cancellation.
double series_small(double y) {
  const double y2 = y * y;
  return -y * (1.0 - y2 * (1.0 - y2 * (3.0 - 12.0 * y2)));
}

constexpr double kSeriesCut = 3.0e-3;

}  // namespace

double eval_profile(double y) {
  if (y == 0.0) return 0.0;
  const double a = std::abs(y);
  const double w = (a < kSeriesCut) ? series_small(a) : cardano_positive(a);
  return (y > 0.0) ? w : -w;
}

double eval_profile_deriv(double y, int k) {
  if (k < 0 || k > 5) throw DomainError("profile derivative order must be in 0..5");
  const double w = eval_profile(y);
  if (k == 0) return w;
  // Implicit differentiation of W^3 + W + y = 0 with D = 1 + 3W^2.
  const double d = 1.0 + 3.0 * w * w;
  const double d1 = -1.0 / d;
  if (k == 1) return d1;
  const double d2 = -6.0 * w * d1 * d1 / d;
  if (k == 2) return d2;
  const double d3 = (-6.0 * d1 * d1 * d1 - 18.0 * w * d1 * d2) / d;
  if (k == 3) return d3;
  const double d4 = (-36.0 * d1 * d1 * d2 - 18.0 * w * d2 * d2 - 24.0 * w * d1 * d3) / d;
  if (k == 4) return d4;
  const double d5 = (-90.0 * d1 * d2 * d2 - 60.0 * d1 * d1 * d3 - 60.0 * w * d2 * d3 -
                     30.0 * w * d1 * d4) /
                    d;
  return d5;
}

double eval_profile_rescaled(double y, double nu) {
  if (!(nu > 0.0)) throw DomainError("profile rescaling parameter must be positive");
  const double lam = std::sqrt(nu / 6.0);
  return eval_profile(lam * y) / lam;
}

double eval_profile_rescaled_deriv(double y, double nu, int k) {
  if (!(nu > 0.0)) throw DomainError("profile rescaling parameter must be positive");
  const double lam = std::sqrt(nu / 6.0);
  return std::pow(lam, k - 1) * eval_profile_deriv(lam * y, k);
}

double profile_cubic_residual(double y) {
  const double w = eval_profile(y);
  return (w * w * w + w) + y;
}

double profile_ode_residual(double y) {
  const double w = eval_profile(y);
  const double dw = eval_profile_deriv(y, 1);
  return -0.5 * w + (1.5 * y + w) * dw;
}

namespace {

// Symmetric sample set: uniform on [0, 1], log-spaced on [1, ymax], mirrored.
std::vector<double> bound_grid(double y_abs_max, std::size_t per_decade) {
  std::vector<double> ys;
  const std::size_t n_lin = std::max<std::size_t>(per_decade, 16);
  for (std::size_t i = 0; i <= n_lin; ++i) ys.push_back(double(i) / double(n_lin));
  const double decades = std::log10(y_abs_max);
  const auto n_log = std::size_t(std::ceil(decades * double(per_decade)));
  for (std::size_t i = 1; i <= n_log; ++i)
    ys.push_back(std::pow(10.0, decades * double(i) / double(n_log)));
  const std::size_t half = ys.size();
  for (std::size_t i = 0; i < half; ++i)
    if (ys[i] != 0.0) ys.push_back(-ys[i]);
  return ys;
}

void tally(BoundCheck& c, double measured, double allowed, double y) {
  ++c.samples;
  const double margin = allowed - measured;
  if (c.samples == 1 || margin < c.worst_margin) {
    c.worst_margin = margin;
    c.worst_y = y;
  }
  if (margin < 0.0) ++c.violations;
}

}  // namespace

BoundReport check_profile_bounds(double y_abs_max, std::size_t points_per_decade) {
  if (!(y_abs_max >= 10.0)) throw DomainError("bound check range must reach |y| >= 10");
  BoundReport rep;
  rep.y_abs_max = y_abs_max;

  BoundCheck value{"value_decay", 0, 0, 0.0, 0.0, false};          // |W| <= <y>^{1/3}
  BoundCheck slope{"slope_decay", 0, 0, 0.0, 0.0, false};          // |W'| <= <y>^{-2/3}
  BoundCheck curvature{"curvature_decay", 0, 0, 0.0, 0.0, false};  // |W''| <= <y>^{-5/3}
  BoundCheck slope_low{"slope_range_low", 0, 0, 0.0, 0.0, false};  // W' >= -1
  BoundCheck slope_high{"slope_range_high", 0, 0, 0.0, 0.0, false};  // W' <= 0
  BoundCheck win_lo{"far_slope_window_low", 0, 0, 0.0, 0.0, false};   // |W'| >= <y>^{-2/3}/4
  BoundCheck win_hi{"far_slope_window_high", 0, 0, 0.0, 0.0, false};  // |W'| <= 7<y>^{-2/3}/20

  double c3 = 0.0, c4 = 0.0, c5 = 0.0;
  double cubic = 0.0, cubic_scaled = 0.0, ode = 0.0;

  for (double y : bound_grid(y_abs_max, points_per_decade)) {
    const double br = jbracket(y);
    const double w = eval_profile(y);
    const double d1 = eval_profile_deriv(y, 1);
    const double d2 = eval_profile_deriv(y, 2);

    tally(value, std::abs(w), std::cbrt(br), y);
    tally(slope, std::abs(d1), std::pow(br, -2.0 / 3.0), y);
    tally(curvature, std::abs(d2), std::pow(br, -5.0 / 3.0), y);
    tally(slope_low, -d1, 1.0, y);
    tally(slope_high, d1, 0.0, y);
    if (std::abs(y) >= 100.0) {
      const double ref = std::pow(br, -2.0 / 3.0);
      tally(win_lo, 0.25 * ref, std::abs(d1), y);
      tally(win_hi, std::abs(d1), 0.35 * ref, y);
    }

    c3 = std::max(c3, std::abs(eval_profile_deriv(y, 3)) * std::pow(br, 3.0 - 1.0 / 3.0));
    c4 = std::max(c4, std::abs(eval_profile_deriv(y, 4)) * std::pow(br, 4.0 - 1.0 / 3.0));
    c5 = std::max(c5, std::abs(eval_profile_deriv(y, 5)) * std::pow(br, 5.0 - 1.0 / 3.0));

    const double cr = std::abs(profile_cubic_residual(y));
    cubic = std::max(cubic, cr);
    cubic_scaled = std::max(cubic_scaled, cr / std::max(1.0, std::abs(y)));
    ode = std::max(ode, std::abs(profile_ode_residual(y)));
  }

  for (BoundCheck* c : {&value, &slope, &curvature, &slope_low, &slope_high, &win_lo, &win_hi}) {
    c->pass = (c->violations == 0);
    rep.samples = std::max(rep.samples, c->samples);
    rep.checks.push_back(*c);
  }
  rep.fitted_c345 = {c3, c4, c5};
  rep.max_cubic_residual = cubic;
  rep.max_cubic_residual_scaled = cubic_scaled;
  rep.max_ode_residual = ode;
  rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(),
                         [](const BoundCheck& c) { return c.pass; });
  return rep;
}

}  // namespace swbreak
