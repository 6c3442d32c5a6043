#include "swbreak/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "frame_eval.hpp"
#include "interp.hpp"
#include "swbreak/errors.hpp"
#include "swbreak/profile.hpp"

namespace swbreak {

namespace {

// Least-squares line y = intercept + slope * x.
struct LineFit {
  double slope = 0.0, intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t n = 0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  f.n = x.size();
  if (f.n < 2) throw InsufficientDataError("fit_line: need at least 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < f.n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(f.n);
  my /= static_cast<double>(f.n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < f.n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InsufficientDataError("fit_line: abscissae are all identical");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (f.n > 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) {
      const double r = y[i] - (f.intercept + f.slope * x[i]);
      ss += r * r;
    }
    f.slope_stderr = std::sqrt(ss / static_cast<double>(f.n - 2) / sxx);
  }
  return f;
}

// 9-point centered stencils at node stride k on a unit-spaced array,
// evaluated with paired summation so the opposite-parity component of the
// data cancels exactly.
double stencil_d1(const std::vector<double>& p, std::size_t c, std::size_t k = 1) {
  return 0.8 * (p[c + k] - p[c - k]) - 0.2 * (p[c + 2 * k] - p[c - 2 * k]) +
         (4.0 / 105.0) * (p[c + 3 * k] - p[c - 3 * k]) -
         (1.0 / 280.0) * (p[c + 4 * k] - p[c - 4 * k]);
}
double stencil_d2(const std::vector<double>& p, std::size_t c, std::size_t k = 1) {
  return 1.6 * (p[c + k] + p[c - k]) - 0.2 * (p[c + 2 * k] + p[c - 2 * k]) +
         (8.0 / 315.0) * (p[c + 3 * k] + p[c - 3 * k]) -
         (1.0 / 560.0) * (p[c + 4 * k] + p[c - 4 * k]) - (205.0 / 72.0) * p[c];
}
double stencil_d3(const std::vector<double>& p, std::size_t c, std::size_t k = 1) {
  return -(61.0 / 30.0) * (p[c + k] - p[c - k]) + (169.0 / 120.0) * (p[c + 2 * k] - p[c - 2 * k]) -
         0.3 * (p[c + 3 * k] - p[c - 3 * k]) + (7.0 / 240.0) * (p[c + 4 * k] - p[c - 4 * k]);
}
double stencil_d4(const std::vector<double>& p, std::size_t c, std::size_t k = 1) {
  return -(122.0 / 15.0) * (p[c + k] + p[c - k]) + (169.0 / 60.0) * (p[c + 2 * k] + p[c - 2 * k]) -
         0.4 * (p[c + 3 * k] + p[c - 3 * k]) + (7.0 / 240.0) * (p[c + 4 * k] + p[c - 4 * k]) +
         (91.0 / 8.0) * p[c];
}

// Sum of |coefficients| of the 4th-derivative stencil: its roundoff amplification.
constexpr double kAbs4 = 34.13333333333333;

struct Jets {
  double d0 = 0, d1 = 0, d2 = 0, d3 = 0, d4 = 0;
};

// All derivatives at interior node c of a uniform-in-y array with spacing h,
// stencils stepping k nodes per arm (effective spacing k*h).
Jets patch_jets(const std::vector<double>& p, std::size_t c, std::size_t k, double h) {
  const double hk = static_cast<double>(k) * h;
  Jets j;
  j.d0 = p[c];
  j.d1 = stencil_d1(p, c, k) / hk;
  j.d2 = stencil_d2(p, c, k) / (hk * hk);
  j.d3 = stencil_d3(p, c, k) / (hk * hk * hk);
  j.d4 = stencil_d4(p, c, k) / (hk * hk * hk * hk);
  return j;
}

// Derivatives w.r.t. r = |y| at node c of an array sampled on a log grid
// r_j = r_0 * e^{a j}, via the scale derivative theta = r d/dr:
//   r f_r = t1,  r^2 f_rr = t2 - t1,  r^3 f_rrr = t3 - 3 t2 + 2 t1,
//   r^4 f_rrrr = t4 - 6 t3 + 11 t2 - 6 t1,   t_k = (d/dj)^k f / a^k.
Jets log_jets(const std::vector<double>& p, std::size_t c, double a, double r) {
  const double t1 = stencil_d1(p, c) / a;
  const double t2 = stencil_d2(p, c) / (a * a);
  const double t3 = stencil_d3(p, c) / (a * a * a);
  const double t4 = stencil_d4(p, c) / (a * a * a * a);
  Jets j;
  j.d0 = p[c];
  j.d1 = t1 / r;
  j.d2 = (t2 - t1) / (r * r);
  j.d3 = (t3 - 3.0 * t2 + 2.0 * t1) / (r * r * r);
  j.d4 = (t4 - 6.0 * t3 + 11.0 * t2 - 6.0 * t1) / (r * r * r * r);
  return j;
}

// Running worst |value| with its location.
struct Extreme {
  double worst = 0.0;
  double loc = 0.0;
  bool any = false;
  void take(double v, double at) {
    v = std::abs(v);
    if (!any || v > worst) {
      worst = v;
      loc = at;
      any = true;
    }
  }
};

double angle_bracket(double y) { return std::sqrt(1.0 + y * y); }

// Unwrap a periodic coordinate series: each hop is taken modulo the period,
// choosing the representative nearest zero.
std::vector<double> unwrap_series(const std::vector<ModulationRecord>& mods, std::size_t lo,
                                  std::size_t hi) {
  std::vector<double> out(hi - lo);
  out[0] = mods[lo].xi;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    double hop = mods[i].xi - mods[i - 1].xi;
    const double period = mods[i].domain_length;
    if (period > 0.0) hop = std::remainder(hop, period);
    out[i - lo] = out[i - lo - 1] + hop;
  }
  return out;
}

// T* and extrapolated x* from a contiguous slice [lo, hi) of the series.
struct SliceFit {
  double t_star = 0.0, x_star_raw = 0.0;
  bool ok = false;
};

SliceFit fit_slice(const std::vector<ModulationRecord>& mods, std::size_t lo, std::size_t hi) {
  SliceFit out;
  const std::size_t n = hi - lo;
  if (n < 2) return out;
  std::vector<double> t(n), gap(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = mods[lo + i].t;
    gap[i] = mods[lo + i].tau - mods[lo + i].t;
  }
  const LineFit lf = fit_line(t, gap);
  if (!(lf.slope < 0.0)) return out;
  out.t_star = -lf.intercept / lf.slope;
  const std::vector<double> xi_u = unwrap_series(mods, lo, hi);
  const LineFit xf = fit_line(t, xi_u);
  out.x_star_raw = xi_u.back() + xf.slope * (out.t_star - t.back());
  out.ok = true;
  return out;
}

}  // namespace

double resolvable_floor(double dx, double lambda) {
  if (!(dx > 0.0) || !(lambda > 0.0))
    throw DomainError("resolvable_floor: dx and lambda must be positive");
  return std::pow(20.0 * lambda * dx, 2.0 / 3.0);
}

BlowupEstimate estimate_blowup(const std::vector<ModulationRecord>& mods, double floor) {
  if (!(floor >= 0.0) || !std::isfinite(floor))
    throw DomainError("estimate_blowup: floor must be finite and nonnegative");
  std::vector<ModulationRecord> resolved;
  for (const auto& m : mods)
    if (m.tau - m.t >= floor) resolved.push_back(m);
  for (std::size_t i = 1; i < resolved.size(); ++i)
    if (!(resolved[i].t > resolved[i - 1].t))
      throw DomainError("estimate_blowup: records must be ordered by strictly increasing t");
  if (resolved.size() < 5)
    throw InsufficientDataError(
        "estimate_blowup: fewer than 5 records inside the resolvable window");

  const double gap_last = resolved.back().tau - resolved.back().t;
  const double gap_first = resolved.front().tau - resolved.front().t;
  if (!(gap_first > gap_last))
    throw ExtractionError("estimate_blowup: tau - t is not decreasing; no breaking detected");

  // Fit window: the last resolved decade of tau - t, at least 5 records.
  std::size_t lo = 0;
  while (lo < resolved.size() && resolved[lo].tau - resolved[lo].t > 10.0 * gap_last) ++lo;
  lo = std::min(lo, resolved.size() - 5);
  const std::size_t hi = resolved.size();

  const SliceFit full = fit_slice(resolved, lo, hi);
  if (!full.ok)
    throw ExtractionError("estimate_blowup: tau - t is not decreasing; no breaking detected");

  BlowupEstimate est;
  est.t_star = full.t_star;
  est.window_begin = resolved[lo].t;
  est.samples = hi - lo;

  const double period = resolved.back().domain_length;
  const auto fold = [period](double x) {
    return period > 0.0 ? std::remainder(x, period) : x;
  };
  est.x_star = fold(full.x_star_raw);

  // Spread of the estimate across the two halves of the fit window.
  const std::size_t mid = lo + (hi - lo) / 2;
  for (const auto& [a, b] : {std::pair{lo, mid}, std::pair{mid, hi}}) {
    const SliceFit part = fit_slice(resolved, a, b);
    if (!part.ok) continue;
    est.t_uncertainty = std::max(est.t_uncertainty, std::abs(part.t_star - full.t_star));
    est.x_uncertainty =
        std::max(est.x_uncertainty, std::abs(fold(part.x_star_raw - full.x_star_raw)));
  }
  return est;
}

RateCheck rate_check(const std::vector<StepRecord>& recs, double t_star, double floor) {
  if (!(floor >= 0.0) || !std::isfinite(floor) || !std::isfinite(t_star))
    throw DomainError("rate_check: t_star and floor must be finite, floor nonnegative");
  RateCheck rc;
  rc.window_begin = std::numeric_limits<double>::infinity();
  for (const auto& r : recs) {
    if (!(t_star - r.t >= floor)) continue;
    rc.t.push_back(r.t);
    // max|dw/dx| is realized on the steepening side once breaking develops
    rc.product.push_back((t_star - r.t) * -r.min_slope);
    rc.window_begin = std::min(rc.window_begin, r.t);
  }
  if (rc.product.empty())
    throw InsufficientDataError("rate_check: no records inside the resolvable window");
  rc.worst_low = *std::min_element(rc.product.begin(), rc.product.end());
  rc.worst_high = *std::max_element(rc.product.begin(), rc.product.end());
  for (std::size_t i = 1; i < rc.product.size(); ++i)
    rc.max_jump = std::max(rc.max_jump, std::abs(rc.product[i] - rc.product[i - 1]));
  rc.in_band = rc.worst_low >= 0.5 && rc.worst_high <= 2.0;
  rc.continuous = rc.max_jump <= 0.05;
  return rc;
}

CuspFit cusp_fit(const RiemannState& state, double x_star) {
  const Grid& g = state.grid;
  CuspFit cf;
  cf.window_lo = 20.0 * g.dx();
  cf.window_hi = std::min(0.5, g.length / 8.0);
  if (!(cf.window_hi / cf.window_lo >= std::pow(10.0, 1.5)))
    throw InsufficientDataError("cusp_fit: fit window spans fewer than 1.5 decades");
  const double w_star = detail::interp6_periodic(state.w, g, x_star);
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < g.n; ++i) {
    const double d = std::abs(g.min_image(g.x(i), x_star));
    if (d < cf.window_lo || d > cf.window_hi) continue;
    const double v = std::abs(state.w[i] - w_star);
    if (!(v > 0.0)) continue;
    lx.push_back(std::log(d));
    ly.push_back(std::log(v));
  }
  if (lx.size() < 8)
    throw InsufficientDataError("cusp_fit: fewer than 8 usable samples in the window");
  const LineFit lf = fit_line(lx, ly);
  cf.exponent = lf.slope;
  cf.confidence = 2.0 * lf.slope_stderr;
  cf.samples = lf.n;
  cf.log_r = std::move(lx);
  cf.log_dw = std::move(ly);
  return cf;
}

ConvergenceSeries convergence_check(const std::vector<SelfSimilarFrame>& frames, double nu,
                                    double threshold, double y_cap) {
  if (frames.empty()) throw InsufficientDataError("convergence_check: no frames");
  if (!(threshold > 0.0) || !(y_cap > 0.0))
    throw DomainError("convergence_check: threshold and y_cap must be positive");
  ConvergenceSeries cs;
  cs.threshold = threshold;
  cs.y_cap = y_cap;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i > 0 && !(frames[i].s > frames[i - 1].s))
      throw DomainError("convergence_check: frames must be ordered by increasing s");
    cs.s.push_back(frames[i].s);
    cs.sup.push_back(frame_sup_deviation(frames[i], nu, y_cap));
  }
  cs.final_sup = cs.sup.back();
  cs.below_threshold = cs.final_sup < threshold;
  // monotone over the final unit of s, with relative slack for extraction noise
  cs.eventually_decreasing = true;
  const double s_from = cs.s.back() - 1.0;
  for (std::size_t i = 1; i < cs.sup.size(); ++i) {
    if (cs.s[i - 1] < s_from) continue;
    if (cs.sup[i] > cs.sup[i - 1] * (1.0 + 1e-6)) cs.eventually_decreasing = false;
  }
  return cs;
}

BootstrapReport bootstrap_check(const SelfSimilarFrame& frame,
                                const std::vector<ModulationRecord>& mods, std::size_t idx,
                                const SeedParams& params, double relax) {
  params.validate();
  if (!(relax > 0.0)) throw DomainError("bootstrap_check: relax must be positive");
  if (idx >= mods.size()) throw DomainError("bootstrap_check: idx outside the record series");
  if (mods[idx].t != frame.t_source)
    throw DomainError("bootstrap_check: mods[idx] does not match the frame's source snapshot");

  const double s = frame.s;
  const double ell = params.ell();
  const double M = params.M;
  const double delta = params.delta;
  const double mid_hi = 0.5 * std::exp(1.5 * s);
  const double d12 = std::pow(delta, 1.0 / 12.0);
  const double e12 = std::exp(0.5 * s);

  // Worst-value accumulators, one per inequality row.
  Extreme pert0_near, pert0_mid, pert1_near, pert1_mid, slope_far, pert2_near, curv_out,
      pert3_near, pert4_near, amp_global, fourth_global, pert3_origin, z_amp, z_slope, z_fourth,
      slope_all;

  // ---- uniform patch: full jets at interior nodes
  const std::vector<double>& py = frame.py;
  const std::size_t pn = py.size();
  const std::size_t pc = frame.patch_half_count;
  const double h = frame.patch_step;
  std::vector<double> ptW(pn);  // perturbation W - Wbar on the patch
  double max_field = 0.0;
  for (std::size_t i = 0; i < pn; ++i) {
    ptW[i] = frame.pW[i] - eval_profile(py[i]);
    max_field = std::max({max_field, std::abs(frame.pW[i]), std::abs(frame.pZ[i])});
    amp_global.take(frame.pW[i] + e12 * frame.kappa, py[i]);
    z_amp.take(frame.pZ[i], py[i]);
    if (std::abs(py[i]) <= ell) pert0_near.take(ptW[i], py[i]);
    if (ell <= std::abs(py[i]) && std::abs(py[i]) <= mid_hi)
      pert0_mid.take(ptW[i] / std::cbrt(angle_bracket(py[i])), py[i]);
  }
  // Stride for the patch stencils: the patch oversamples its source grid, so
  // unit-stride high derivatives would amplify interpolation noise.
  std::size_t stride = 1;
  if (pn >= 9 && pn == 2 * pc + 1)
    stride = std::clamp<std::size_t>(frame_stencil_stride(frame), 1, (pn - 1) / 8);
  const bool patch_interior = pn >= 8 * stride + 1;
  if (patch_interior) {
    for (std::size_t i = 4 * stride; i + 4 * stride < pn; ++i) {
      const double y = py[i];
      const double ay = std::abs(y);
      const Jets w = patch_jets(frame.pW, i, stride, h);
      const Jets tw = patch_jets(ptW, i, stride, h);
      const Jets z = patch_jets(frame.pZ, i, stride, h);
      slope_all.take(w.d1, y);
      fourth_global.take(w.d4, y);
      z_slope.take(z.d1, y);
      z_fourth.take(z.d4, y);
      if (ay <= ell) {
        pert1_near.take(tw.d1, y);
        pert2_near.take(tw.d2, y);
        pert3_near.take(tw.d3, y);
        pert4_near.take(tw.d4, y);
      }
      if (ay >= ell && ay <= mid_hi)
        pert1_mid.take(tw.d1 * std::pow(angle_bracket(y), 2.0 / 3.0), y);
      if (ay >= ell) curv_out.take(w.d2, y);
      if (ay >= mid_hi) slope_far.take(w.d1, y);
      if (i == pc) pert3_origin.take(tw.d3, y);
    }
  }

  // ---- log grid: jets per side through the scale-derivative chain rule.
  // Fourth derivatives are used only beyond the patch cover, where the
  // 1/(a r)^4 roundoff amplification stays far below every threshold.
  const double a = std::log(10.0) / static_cast<double>(frame.nodes_per_decade);
  const std::size_t m = frame.y.size() / 2;
  const double cover = py.empty() ? 0.0 : py.back() - 3.0 * static_cast<double>(stride) * h;
  const bool log_d4_ok = cover > 0.0;  // a 3-node patch covers nothing: no safe log d4
  for (int side = 0; side < 2; ++side) {
    std::vector<double> r(m), W(m), Z(m), tW(m);
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t idx_side = side == 0 ? m + j : m - 1 - j;
      r[j] = std::abs(frame.y[idx_side]);
      W[j] = frame.W[idx_side];
      Z[j] = frame.Z[idx_side];
      tW[j] = W[j] - eval_profile(frame.y[idx_side]);
      max_field = std::max({max_field, std::abs(W[j]), std::abs(Z[j])});
      const double yv = frame.y[idx_side];
      amp_global.take(W[j] + e12 * frame.kappa, yv);
      z_amp.take(Z[j], yv);
      if (r[j] <= ell) pert0_near.take(tW[j], yv);
      if (ell <= r[j] && r[j] <= mid_hi)
        pert0_mid.take(tW[j] / std::cbrt(angle_bracket(r[j])), yv);
    }
    if (m < 9) continue;
    for (std::size_t j = 4; j + 4 < m; ++j) {
      const double yv = side == 0 ? r[j] : -r[j];
      const Jets w = log_jets(W, j, a, r[j]);
      const Jets tw = log_jets(tW, j, a, r[j]);
      const Jets z = log_jets(Z, j, a, r[j]);
      slope_all.take(w.d1, yv);
      z_slope.take(z.d1, yv);
      if (log_d4_ok && r[j] >= cover) {
        fourth_global.take(w.d4, yv);
        z_fourth.take(z.d4, yv);
      }
      if (r[j] <= ell) {
        pert1_near.take(tw.d1, yv);
        pert2_near.take(tw.d2, yv);
      }
      if (ell <= r[j] && r[j] <= mid_hi)
        pert1_mid.take(tw.d1 * std::pow(angle_bracket(r[j]), 2.0 / 3.0), yv);
      if (r[j] >= ell) curv_out.take(w.d2, yv);
      if (r[j] >= mid_hi) slope_far.take(w.d1, yv);
    }
  }

  // ---- modulation rows
  Extreme tau_amp, tau_rate, xi_amp, xi_rate;
  tau_amp.take(mods[idx].tau, mods[idx].t);
  xi_amp.take(mods[idx].xi, mods[idx].t);
  if (mods.size() >= 2) {
    const ModulationRates rates = modulation_rates(mods);
    tau_rate.take(rates.tau_dot[idx], mods[idx].t);
    xi_rate.take(rates.xi_dot[idx], mods[idx].t);
  }

  BootstrapReport rep;
  rep.s = s;
  const auto emit = [&](const std::string& id, BootstrapRegion region, const Extreme& e,
                        double threshold) {
    InequalityRecord r;
    r.id = id;
    r.region = region;
    r.region_empty = !e.any;
    if (e.any) {
      r.margin = relax * threshold - e.worst;
      r.location = e.loc;
      r.pass = r.margin >= 0.0;
    }
    rep.records.push_back(r);
  };

  emit("pert0-near", BootstrapRegion::near, pert0_near, d12 * ell * ell * ell * ell);
  emit("pert0-mid", BootstrapRegion::middle, pert0_mid, std::pow(delta, 1.0 / 15.0));
  emit("pert1-near", BootstrapRegion::near, pert1_near, d12 * ell * ell * ell);
  emit("pert1-mid", BootstrapRegion::middle, pert1_mid, std::pow(delta, 1.0 / 18.0));
  emit("slope-far", BootstrapRegion::far, slope_far, 2.0 * std::exp(-s));
  emit("pert2-near", BootstrapRegion::near, pert2_near, d12 * ell * ell);
  emit("curv-out", BootstrapRegion::middle, curv_out, std::pow(M, 0.2));
  emit("pert3-near", BootstrapRegion::near, pert3_near, d12 * ell);
  emit("pert4-near", BootstrapRegion::near, pert4_near, d12);
  emit("amp-global", BootstrapRegion::global, amp_global, M * e12);
  emit("fourth-global", BootstrapRegion::global, fourth_global, M);
  emit("pert3-origin", BootstrapRegion::origin, pert3_origin, std::pow(delta, 1.0 / 9.0));
  emit("z-amp", BootstrapRegion::global, z_amp, M * delta);
  emit("z-slope", BootstrapRegion::global, z_slope, M * std::exp(-5.0 * s / 6.0));
  emit("z-fourth", BootstrapRegion::global, z_fourth, M * std::exp(-2.0 * s / 3.0));
  emit("tau-amp", BootstrapRegion::modulation, tau_amp, 2.0 * M * std::pow(delta, 4.0 / 3.0));
  emit("tau-rate", BootstrapRegion::modulation, tau_rate, 2.0 * M * std::exp(-s / 3.0));
  emit("xi-amp", BootstrapRegion::modulation, xi_amp, 2.0 * M * delta);
  emit("xi-rate", BootstrapRegion::modulation, xi_rate, 2.0 * M);

  // two-sided slope band: 99/100 <= sup|dW/dy| <= 101/100
  {
    InequalityRecord r;
    r.id = "slope-band";
    r.region = BootstrapRegion::global;
    r.region_empty = !slope_all.any;
    if (slope_all.any) {
      r.margin = std::min(slope_all.worst - 0.99 / relax, 1.01 * relax - slope_all.worst);
      r.location = slope_all.loc;
      r.pass = r.margin >= 0.0;
    }
    rep.records.push_back(r);
  }
  // extremum of |dW/dy| sits at the origin and matches -dW/dy(0)
  {
    InequalityRecord r;
    r.id = "slope-origin";
    r.region = BootstrapRegion::origin;
    r.region_empty = !(patch_interior && pc >= 4 && pc + 4 < pn && slope_all.any);
    if (!r.region_empty) {
      const double d1_origin = stencil_d1(frame.pW, pc) / h;
      const double mismatch = std::abs(slope_all.worst + d1_origin);
      r.margin = std::min(0.01 * relax - mismatch, ell * relax - std::abs(slope_all.loc));
      r.location = slope_all.loc;
      r.pass = r.margin >= 0.0;
    }
    rep.records.push_back(r);
  }

  rep.all_pass = true;
  for (const auto& r : rep.records)
    if (!r.region_empty && !r.pass) rep.all_pass = false;

  // Roundoff scale of the 4th-derivative stencils actually used: the patch
  // everywhere inside the cover, the log grid beyond it.
  const double eps = std::numeric_limits<double>::epsilon();
  const double patch_floor = pn ? kAbs4 * eps * max_field / (h * h * h * h) : 0.0;
  double log_floor = 0.0;
  if (m >= 9 && log_d4_ok) {
    double r_used = 0.0;  // smallest |y| whose d4 came from the log grid
    for (std::size_t j = 4; j + 4 < m; ++j) {
      const double rv = std::abs(frame.y[m + j]);
      if (rv >= cover) {
        r_used = rv;
        break;
      }
    }
    if (r_used > 0.0) {
      const double t4 = kAbs4 / (a * a * a * a);
      log_floor = eps * max_field * t4 / (r_used * r_used * r_used * r_used);
    }
  }
  rep.noise_floor_d4 = std::max(patch_floor, log_floor);
  return rep;
}

TrajectoryPath trace_trajectory(const std::vector<SelfSimilarFrame>& frames,
                                const std::vector<ModulationRecord>& mods, double y0,
                                VelocityFamily family, const SeedParams& params) {
  params.validate();
  if (frames.size() < 2 || mods.size() != frames.size())
    throw DomainError("trace_trajectory: need >= 2 frames with one record each");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (mods[i].t != frames[i].t_source)
      throw DomainError("trace_trajectory: mods do not match the frame snapshots");
    if (i > 0 && !(frames[i].s > frames[i - 1].s))
      throw DomainError("trace_trajectory: frames must be ordered by increasing s");
    if (i > 0 && frames[i].s - frames[i - 1].s > 0.1)
      throw DomainError("trace_trajectory: frame spacing exceeds ds = 0.1");
  }
  if (!(std::abs(y0) <= frames.front().y.back()))
    throw DomainError("trace_trajectory: y0 outside the first frame");

  const ModulationRates rates = modulation_rates(mods);
  // Repackage each frame's transport velocity as a frame so the shared
  // interpolator can evaluate it (patch + log layouts are identical).
  std::vector<SelfSimilarFrame> vf(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const TransportVelocities tv = transport_velocities(frames[i], rates, i);
    vf[i] = frames[i];
    vf[i].W = family == VelocityFamily::W ? tv.vW : tv.vZ;
    vf[i].pW = family == VelocityFamily::W ? tv.pvW : tv.pvZ;
  }

  TrajectoryPath path;
  const double s0 = frames.front().s;
  double phi = y0;
  path.s.push_back(s0);
  path.phi.push_back(phi);
  for (std::size_t i = 0; i + 1 < frames.size() && !path.truncated; ++i) {
    const detail::FrameView va(vf[i]), vb(vf[i + 1]);
    const double sa = frames[i].s, sb = frames[i + 1].s;
    const auto vel = [&](double yv, double sv) {
      const double mu = (sv - sa) / (sb - sa);
      return (1.0 - mu) * va.eval(yv, detail::FrameView::Field::W) +
             mu * vb.eval(yv, detail::FrameView::Field::W);
    };
    const auto nsub = static_cast<std::size_t>(std::ceil((sb - sa) / 0.02));
    const double hs = (sb - sa) / static_cast<double>(nsub);
    for (std::size_t k = 0; k < nsub; ++k) {
      const double sc = sa + static_cast<double>(k) * hs;
      try {
        const double k1 = vel(phi, sc);
        const double k2 = vel(phi + 0.5 * hs * k1, sc + 0.5 * hs);
        const double k3 = vel(phi + 0.5 * hs * k2, sc + 0.5 * hs);
        const double k4 = vel(phi + hs * k3, sc + hs);
        const double next = phi + hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        path.integral += 0.5 * hs * (std::pow(angle_bracket(phi), -2.0 / 3.0) +
                                     std::pow(angle_bracket(next), -2.0 / 3.0));
        phi = next;
      } catch (const ExtractionError&) {
        path.truncated = true;
        break;
      }
    }
    if (!path.truncated) {
      path.s.push_back(sb);
      path.phi.push_back(phi);
    }
  }

  const double ell = params.ell();
  const double upper_base = std::abs(y0) + 8.0 * params.M / std::sqrt(params.delta);
  path.upper_ok = true;
  path.lower_applicable = family == VelocityFamily::W && std::abs(y0) >= ell;
  path.lower_ok = true;
  for (std::size_t j = 0; j < path.s.size(); ++j) {
    const double grow = std::exp(1.5 * (path.s[j] - s0));
    if (std::abs(path.phi[j]) > upper_base * grow) path.upper_ok = false;
    if (path.lower_applicable &&
        std::abs(path.phi[j]) < std::abs(y0) * std::exp((path.s[j] - s0) / 5.0))
      path.lower_ok = false;
  }
  path.integral_ok = !path.lower_applicable || path.integral <= 10.0 * std::log(1.0 / ell);
  return path;
}

LifespanFit lifespan_regression(const std::vector<SweepPoint>& sweep) {
  for (const auto& p : sweep) {
    if (!(p.t_star > 0.0) || !(std::max(p.eps, p.beta_star) > 0.0))
      throw DomainError("lifespan_regression: t_star and max{eps, beta*} must be positive");
  }
  if (sweep.size() < 5)
    throw InsufficientDataError("lifespan_regression: need at least 5 sweep points");
  std::vector<double> lm(sweep.size()), lt(sweep.size());
  double m_lo = std::numeric_limits<double>::infinity(), m_hi = 0.0;
  double r_lo = std::numeric_limits<double>::infinity(), r_hi = 0.0;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const double mi = std::max(sweep[i].eps, sweep[i].beta_star);
    lm[i] = std::log(mi);
    lt[i] = std::log(sweep[i].t_star);
    m_lo = std::min(m_lo, mi);
    m_hi = std::max(m_hi, mi);
    r_lo = std::min(r_lo, sweep[i].t_star * mi);
    r_hi = std::max(r_hi, sweep[i].t_star * mi);
  }
  if (!(m_hi / m_lo >= std::pow(10.0, 1.5)))
    throw InsufficientDataError("lifespan_regression: sweep spans fewer than 1.5 decades");
  const LineFit lf = fit_line(lm, lt);
  LifespanFit out;
  out.slope = lf.slope;
  out.intercept = lf.intercept;
  out.in_band = lf.slope >= -1.1 && lf.slope <= -0.9;
  out.max_ratio = r_hi / r_lo;
  out.samples = sweep.size();
  return out;
}

}  // namespace swbreak
