#include "swbreak/renormalization.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "frame_eval.hpp"
#include "interp.hpp"
#include "swbreak/errors.hpp"
#include "swbreak/profile.hpp"
#include "swbreak/solver.hpp"

namespace swbreak {

namespace {

bool finite(double v) { return std::isfinite(v); }

// Minimal patch half-count that still admits the widest (7-point) stencil.
constexpr std::size_t kMinHalfCount = 3;

// Target stencil arm (in profile-normalized units lambda*y) for origin
// derivatives: wide enough to suppress interpolation-noise amplification,
// narrow enough to keep the quartic truncation bias below 0.2%.
constexpr double kStencilArm = 0.04;

double centered3_vertex_value(double sm, double s0, double sp, double* offset) {
  const double denom = sm + sp - 2.0 * s0;
  if (!(denom > 0.0))
    throw ExtractionError("extract_modulation: slope minimum is not locally quadratic");
  const double off = 0.5 * (sm - sp) / denom;
  *offset = std::clamp(off, -0.5, 0.5);
  return s0 - 0.125 * (sm - sp) * (sm - sp) / denom;
}

// Third derivative by the 7-point centered stencil at spacing k*h.  The
// antisymmetric pairing cancels even components of p exactly in floating
// point, not just analytically.
double third_deriv_at(const std::vector<double>& p, std::size_t c, std::size_t k, double h) {
  const double hk = static_cast<double>(k) * h;
  return (-(p[c + 3 * k] - p[c - 3 * k]) + 8.0 * (p[c + 2 * k] - p[c - 2 * k]) -
          13.0 * (p[c + k] - p[c - k])) /
         (8.0 * hk * hk * hk);
}

// Stencil widening factor: bias/noise balance point for a profile whose
// origin third derivative is d3 (scale lambda = sqrt(d3/6)).  Fixed-point
// iteration: the arm must sit inside the cubic core, which itself depends
// on the measured d3, so re-pick until the choice stabilizes.
std::size_t adaptive_spacing(const std::vector<double>& p, std::size_t c, double h,
                             std::size_t kmax) {
  const auto pick = [&](double lambda) {
    const double want = kStencilArm / (lambda * h);
    const auto k = static_cast<std::size_t>(std::llround(std::max(1.0, want)));
    return std::clamp<std::size_t>(k, 1, kmax);
  };
  double lambda = 1.0;
  std::size_t k = pick(lambda);
  for (int pass = 0; pass < 4; ++pass) {
    const double v = third_deriv_at(p, c, k, h);
    if (!finite(v) || !(v > 0.0)) return k;
    lambda = std::sqrt(std::max(v, 0.6) / 6.0);
    const std::size_t next = pick(lambda);
    if (next == k) break;
    k = next;
  }
  return k;
}

}  // namespace

ModulationRecord extract_modulation(const RiemannState& state, std::optional<double> prev_xi) {
  const Grid& g = state.grid;
  const std::vector<double> slope = slope_field(state.w, g);
  std::size_t imin = 0;
  for (std::size_t i = 1; i < g.n; ++i) {
    if (slope[i] < slope[imin]) {
      imin = i;
    } else if (slope[i] == slope[imin] && prev_xi) {
      const double di = std::abs(g.min_image(g.x(i), *prev_xi));
      const double dm = std::abs(g.min_image(g.x(imin), *prev_xi));
      if (di < dm) imin = i;
    }
  }
  if (!(slope[imin] < 0.0))
    throw ExtractionError("extract_modulation: slope minimum is nonnegative; not steepening yet");
  if (imin < 3 || imin >= g.n - 3)
    throw ExtractionError("extract_modulation: slope argmin within 3 cells of the box edge");

  double off = 0.0;
  const double m_v = centered3_vertex_value(slope[g.wrap(static_cast<std::ptrdiff_t>(imin) - 1)],
                                            slope[imin],
                                            slope[g.wrap(static_cast<std::ptrdiff_t>(imin) + 1)],
                                            &off);
  ModulationRecord mod;
  mod.t = state.t;
  mod.vertex_slope = m_v;
  mod.xi = g.x(imin) + off * g.dx();
  mod.kappa = detail::interp6_periodic(state.w, g, mod.xi);
  const double tau_minus_t = -1.0 / m_v;
  mod.tau = state.t + tau_minus_t;
  mod.s = -std::log(tau_minus_t);
  mod.domain_length = g.length;
  return mod;
}

void FrameOptions::validate() const {
  if (!(y_min > 0.0) || !finite(y_min)) throw DomainError("FrameOptions: y_min must be positive");
  if (nodes_per_decade < 4) throw DomainError("FrameOptions: need at least 4 nodes per decade");
  if (y_max < 0.0 || !finite(y_max)) throw DomainError("FrameOptions: y_max must be >= 0");
  if (!(patch_half_width > 0.0)) throw DomainError("FrameOptions: patch_half_width must be positive");
  if (!(patch_step > 0.0)) throw DomainError("FrameOptions: patch_step must be positive");
  if (patch_half_width < 3.0 * patch_step)
    throw DomainError("FrameOptions: patch must span at least 3 steps per side");
}

SelfSimilarFrame to_frame(const RiemannState& state, const ModulationRecord& mod,
                          const Topography& topo, const FrameOptions& opts) {
  opts.validate();
  const Grid& g = state.grid;
  const double e12 = std::exp(0.5 * mod.s);
  const double em32 = std::exp(-1.5 * mod.s);
  const double y_box = std::exp(1.5 * mod.s) * (g.length / 4.0);

  SelfSimilarFrame f;
  f.s = mod.s;
  f.t_source = state.t;
  f.kappa = mod.kappa;
  f.tau = mod.tau;
  f.xi = mod.xi;
  f.origin_slope = mod.vertex_slope * std::exp(-mod.s);
  f.y_min = opts.y_min;
  f.nodes_per_decade = opts.nodes_per_decade;

  double ymax = y_box;
  if (opts.y_max > 0.0) {
    if (opts.y_max > y_box) f.truncated = true;
    ymax = std::min(opts.y_max, y_box);
  }
  if (!(ymax > opts.y_min))
    throw ExtractionError("to_frame: box limit below the innermost node at this s");

  // last node lands on or just past ymax, so the grid spans the box limit
  const double lr = std::log(10.0) / static_cast<double>(opts.nodes_per_decade);
  const auto m = static_cast<std::size_t>(
                     std::ceil(std::log(ymax / opts.y_min) / lr)) + 1;
  f.y.resize(2 * m);
  f.W.resize(2 * m);
  f.Z.resize(2 * m);
  f.B.resize(2 * m);
  for (std::size_t j = 0; j < m; ++j) {
    const double yj = opts.y_min * std::exp(lr * static_cast<double>(j));
    for (int sign = -1; sign <= 1; sign += 2) {
      const std::size_t idx = sign > 0 ? m + j : m - 1 - j;
      const double yv = sign > 0 ? yj : -yj;
      const double x = mod.xi + yv * em32;
      f.y[idx] = yv;
      f.W[idx] = e12 * (detail::interp6_periodic(state.w, g, x) - mod.kappa);
      f.Z[idx] = detail::interp6_periodic(state.z, g, x);
      f.B[idx] = topo.deriv(x, 1);
    }
  }

  // patch, clamped to stay well inside the box at early s
  double half = opts.patch_half_width;
  double step = opts.patch_step;
  if (half > 0.5 * y_box) {
    half = 0.5 * y_box;
    f.truncated = true;
  }
  if (half < 3.0 * step) step = half / 8.0;
  const auto ph = std::max<std::size_t>(
      kMinHalfCount, static_cast<std::size_t>(std::llround(half / step)));
  f.patch_step = step;
  f.patch_half_count = ph;
  f.py.resize(2 * ph + 1);
  f.pW.resize(2 * ph + 1);
  f.pZ.resize(2 * ph + 1);
  for (std::size_t i = 0; i < 2 * ph + 1; ++i) {
    const double yv = (static_cast<double>(i) - static_cast<double>(ph)) * step;
    const double x = mod.xi + yv * em32;
    f.py[i] = yv;
    f.pW[i] = e12 * (detail::interp6_periodic(state.w, g, x) - mod.kappa);
    f.pZ[i] = detail::interp6_periodic(state.z, g, x);
  }
  return f;
}

SelfSimilarFrame resample_frame(const SelfSimilarFrame& src, const FrameOptions& opts) {
  opts.validate();
  if (src.y.size() < 12 || src.py.size() < 7)
    throw ExtractionError("resample_frame: source frame has no usable grid");
  if (opts.y_min < src.y_min)
    throw ExtractionError("resample_frame: target grid extends below the source frame");
  const detail::FrameView view(src);

  SelfSimilarFrame f;
  f.s = src.s;
  f.t_source = src.t_source;
  f.kappa = src.kappa;
  f.tau = src.tau;
  f.xi = src.xi;
  f.origin_slope = src.origin_slope;
  f.truncated = src.truncated;
  f.y_min = opts.y_min;
  f.nodes_per_decade = opts.nodes_per_decade;

  double ymax = opts.y_max > 0.0 ? opts.y_max : view.y_max();
  if (ymax > view.y_max()) {
    ymax = view.y_max();
    f.truncated = true;
  }
  if (!(ymax > opts.y_min))
    throw ExtractionError("resample_frame: empty target grid");

  const double lr = std::log(10.0) / static_cast<double>(opts.nodes_per_decade);
  // the nudge absorbs log/exp round-trip noise when ymax is itself a node of
  // a frame with this layout, so re-resampling reproduces the grid exactly
  const auto m = static_cast<std::size_t>(
                     std::floor(std::log(ymax / opts.y_min) / lr + 1e-9)) + 1;
  f.y.resize(2 * m);
  f.W.resize(2 * m);
  f.Z.resize(2 * m);
  f.B.resize(2 * m);
  for (std::size_t j = 0; j < m; ++j) {
    const double yj = opts.y_min * std::exp(lr * static_cast<double>(j));
    for (int sign = -1; sign <= 1; sign += 2) {
      const std::size_t idx = sign > 0 ? m + j : m - 1 - j;
      const double yv = sign > 0 ? yj : -yj;
      f.y[idx] = yv;
      f.W[idx] = view.eval(yv, detail::FrameView::Field::W);
      f.Z[idx] = view.eval(yv, detail::FrameView::Field::Z);
      f.B[idx] = view.eval(yv, detail::FrameView::Field::B);
    }
  }

  double half = opts.patch_half_width;
  double step = opts.patch_step;
  // clamp to the source patch extent, not the interpolation cover: exact
  // node hits read straight through, and off-node targets in the outer
  // stencil margin are served by the log grid, so re-resampling with the
  // same layout keeps the full patch
  const double extent = view.f.py.back();
  if (half > extent) {
    half = extent;
    f.truncated = true;
  }
  if (half < 3.0 * step) step = half / 8.0;
  const auto ph = std::max<std::size_t>(
      kMinHalfCount, static_cast<std::size_t>(std::llround(half / step)));
  f.patch_step = step;
  f.patch_half_count = ph;
  f.py.resize(2 * ph + 1);
  f.pW.resize(2 * ph + 1);
  f.pZ.resize(2 * ph + 1);
  for (std::size_t i = 0; i < 2 * ph + 1; ++i) {
    const double yv = (static_cast<double>(i) - static_cast<double>(ph)) * step;
    f.py[i] = yv;
    f.pW[i] = view.eval(yv, detail::FrameView::Field::W);
    f.pZ[i] = view.eval(yv, detail::FrameView::Field::Z);
  }
  return f;
}

OriginJets origin_jets(const SelfSimilarFrame& f) {
  const std::size_t ph = f.patch_half_count;
  if (ph < kMinHalfCount || f.pW.size() != 2 * ph + 1)
    throw ExtractionError("origin_jets: frame patch too small for centered stencils");
  const std::size_t c = ph;
  const double h = f.patch_step;
  const std::size_t k = adaptive_spacing(f.pW, c, h, ph / 3);
  const double hk = static_cast<double>(k) * h;
  // odd/even pairings keep the opposite-parity component of p cancelled
  // exactly in floating point
  const auto d1 = [&](const std::vector<double>& p) {
    return (8.0 * (p[c + k] - p[c - k]) - (p[c + 2 * k] - p[c - 2 * k])) / (12.0 * hk);
  };
  const auto d2 = [&](const std::vector<double>& p) {
    return (16.0 * (p[c - k] + p[c + k]) - (p[c - 2 * k] + p[c + 2 * k]) - 30.0 * p[c]) /
           (12.0 * hk * hk);
  };
  OriginJets j;
  j.spacing = hk;
  j.W0 = f.pW[c];
  j.W1 = d1(f.pW);
  j.W2 = d2(f.pW);
  j.W3 = third_deriv_at(f.pW, c, k, h);
  j.W4 = ((f.pW[c - 2 * k] + f.pW[c + 2 * k]) - 4.0 * (f.pW[c - k] + f.pW[c + k]) +
          6.0 * f.pW[c]) /
         (hk * hk * hk * hk);
  j.Z0 = f.pZ[c];
  j.Z1 = d1(f.pZ);
  j.Z2 = d2(f.pZ);
  return j;
}

double frame_third_derivative(const SelfSimilarFrame& f) {
  const std::size_t ph = f.patch_half_count;
  if (ph < kMinHalfCount || f.pW.size() != 2 * ph + 1)
    throw ExtractionError("frame_third_derivative: frame patch too small");
  const std::size_t k = adaptive_spacing(f.pW, ph, f.patch_step, ph / 3);
  return third_deriv_at(f.pW, ph, k, f.patch_step);
}

std::size_t frame_stencil_stride(const SelfSimilarFrame& f) {
  const std::size_t ph = f.patch_half_count;
  if (ph < kMinHalfCount || f.pW.size() != 2 * ph + 1)
    throw ExtractionError("frame_stencil_stride: frame patch too small");
  return adaptive_spacing(f.pW, ph, f.patch_step, ph / 3);
}

NuEstimate estimate_nu(const std::vector<SelfSimilarFrame>& frames) {
  if (frames.size() < 3)
    throw InsufficientDataError("estimate_nu: need at least three frames");
  for (std::size_t i = 1; i < frames.size(); ++i)
    if (!(frames[i].s > frames[i - 1].s))
      throw DomainError("estimate_nu: frames must be ordered with increasing s");
  if (!(frames.back().s - frames.front().s >= 1.0))
    throw InsufficientDataError("estimate_nu: frames must span at least one unit of s");

  std::vector<double> vals(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) vals[i] = frame_third_derivative(frames[i]);

  // window: the final unit of s (at least the last two frames)
  std::size_t w0 = 0;
  while (w0 + 2 < frames.size() && frames[w0].s < frames.back().s - 1.0) ++w0;
  double up = 0.0, down = 0.0;
  for (std::size_t i = w0; i + 1 < vals.size(); ++i) {
    const double d = vals[i + 1] - vals[i];
    (d >= 0.0 ? up : down) += std::abs(d);
  }
  NuEstimate est;
  est.nu = vals.back();
  est.uncertainty = std::abs(vals.back() - vals[w0]);
  est.counter_drift = std::min(up, down);
  est.reliable =
      est.counter_drift <= std::max(est.uncertainty, 1e-6 * std::max(1.0, std::abs(est.nu)));
  return est;
}

ModulationRates modulation_rates(const std::vector<ModulationRecord>& mods) {
  const std::size_t n = mods.size();
  if (n < 2) throw InsufficientDataError("modulation_rates: need at least two records");
  for (std::size_t i = 1; i < n; ++i)
    if (!(mods[i].t > mods[i - 1].t))
      throw DomainError("modulation_rates: records must be ordered with increasing t");

  ModulationRates r;
  r.t.resize(n);
  r.s.resize(n);
  r.kappa_dot.resize(n);
  r.tau_dot.resize(n);
  r.xi_dot.resize(n);
  r.beta_tau.resize(n);
  // xi lives on a periodic box: difference its unwrapped trajectory.  The
  // cadence must keep per-record hops under half the box for this to be
  // unambiguous.
  std::vector<double> xi_u(n);
  xi_u[0] = mods[0].xi;
  for (std::size_t i = 1; i < n; ++i) {
    const double hop = mods[i].xi - mods[i - 1].xi;
    const double period = mods[i].domain_length;
    xi_u[i] = xi_u[i - 1] + (period > 0.0 ? std::remainder(hop, period) : hop);
  }
  const auto diff = [&](auto field, std::size_t lo, std::size_t hi) {
    return (mods[hi].*field - mods[lo].*field) / (mods[hi].t - mods[lo].t);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? i : i + 1;
    r.t[i] = mods[i].t;
    r.s[i] = mods[i].s;
    r.kappa_dot[i] = diff(&ModulationRecord::kappa, lo, hi);
    r.tau_dot[i] = diff(&ModulationRecord::tau, lo, hi);
    r.xi_dot[i] = (xi_u[hi] - xi_u[lo]) / (mods[hi].t - mods[lo].t);
    if (!(r.tau_dot[i] < 1.0))
      throw ExtractionError("modulation_rates: differenced tau_dot reached 1; records too sparse");
    r.beta_tau[i] = 1.0 / (1.0 - r.tau_dot[i]);
  }
  return r;
}

TransportVelocities transport_velocities(const SelfSimilarFrame& f, const ModulationRates& rates,
                                         std::size_t idx) {
  if (idx >= rates.t.size())
    throw DomainError("transport_velocities: record index out of range");
  if (std::abs(rates.t[idx] - f.t_source) > 1e-12 * std::max(1.0, std::abs(f.t_source)))
    throw DomainError("transport_velocities: rates record does not match the frame's source time");

  TransportVelocities v;
  v.beta_tau = rates.beta_tau[idx];
  v.tau_dot = rates.tau_dot[idx];
  v.xi_dot = rates.xi_dot[idx];
  const double e12 = std::exp(0.5 * f.s);
  const double gw_pref = e12 * v.beta_tau;
  const auto fill = [&](const std::vector<double>& y, const std::vector<double>& W,
                        const std::vector<double>& Z, std::vector<double>& vW,
                        std::vector<double>& vZ) {
    vW.resize(y.size());
    vZ.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      vW[i] = 1.5 * y[i] + v.beta_tau * W[i] + gw_pref * (f.kappa + Z[i] / 3.0 - v.xi_dot);
      vZ[i] = 1.5 * y[i] + v.beta_tau * W[i] / 3.0 + gw_pref * (f.kappa / 3.0 + Z[i] - v.xi_dot);
    }
  };
  fill(f.y, f.W, f.Z, v.vW, v.vZ);
  fill(f.py, f.pW, f.pZ, v.pvW, v.pvZ);
  v.G_W0 = gw_pref * (f.kappa + f.pZ[f.patch_half_count] / 3.0 - v.xi_dot);
  return v;
}

ModulationResiduals modulation_residuals(const std::vector<ModulationRecord>& mods,
                                         const std::vector<SelfSimilarFrame>& frames,
                                         const Topography& topo, double beta_star) {
  if (mods.size() != frames.size())
    throw DomainError("modulation_residuals: record/frame count mismatch");
  if (mods.size() < 3)
    throw InsufficientDataError("modulation_residuals: need at least three records");
  const ModulationRates rates = modulation_rates(mods);

  ModulationResiduals out;
  for (std::size_t i = 1; i + 1 < mods.size(); ++i) {
    const OriginJets j = origin_jets(frames[i]);
    if (!(std::abs(j.W3) > 1e-9))
      throw ExtractionError("modulation_residuals: origin third derivative too small");
    const double s = mods[i].s;
    const double xi = mods[i].xi;
    const double kappa_pred =
        std::exp(s) * (mods[i].kappa + j.Z0 / 3.0 - rates.xi_dot[i]) -
        0.75 * beta_star * topo.deriv(xi, 1);
    const double tau_pred = std::exp(0.5 * s) * j.Z1 / 3.0 -
                            0.75 * beta_star * std::exp(-2.0 * s) * topo.deriv(xi, 2);
    const double xi_pred =
        mods[i].kappa + j.Z0 / 3.0 -
        (j.Z2 / 3.0 - 0.75 * beta_star * std::exp(-4.0 * s) * topo.deriv(xi, 3)) / j.W3;
    out.s.push_back(s);
    out.kappa_res.push_back(rates.kappa_dot[i] - kappa_pred);
    out.tau_res.push_back(rates.tau_dot[i] - tau_pred);
    out.xi_res.push_back(rates.xi_dot[i] - xi_pred);
  }
  return out;
}

std::vector<double> s_rate_residuals(const std::vector<ModulationRecord>& mods) {
  if (mods.size() < 3)
    throw InsufficientDataError("s_rate_residuals: need at least three records");
  const ModulationRates rates = modulation_rates(mods);
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < mods.size(); ++i) {
    const double ds_dt = (mods[i + 1].s - mods[i - 1].s) / (mods[i + 1].t - mods[i - 1].t);
    const double pred = (1.0 - rates.tau_dot[i]) / (mods[i].tau - mods[i].t);
    out.push_back(std::abs(ds_dt - pred) / std::abs(pred));
  }
  return out;
}

double frame_sup_deviation(const SelfSimilarFrame& f, double nu, double y_abs_max) {
  double worst = 0.0;
  const auto visit = [&](double yv, double Wv) {
    if (std::abs(yv) > y_abs_max) return;
    worst = std::max(worst, std::abs(Wv - eval_profile_rescaled(yv, nu)));
  };
  for (std::size_t i = 0; i < f.y.size(); ++i) visit(f.y[i], f.W[i]);
  for (std::size_t i = 0; i < f.py.size(); ++i) visit(f.py[i], f.pW[i]);
  return worst;
}

}  // namespace swbreak
