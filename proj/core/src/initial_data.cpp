#include "swbreak/initial_data.hpp"

#include <algorithm>
#include <cmath>

#include "jet.hpp"
#include "swbreak/errors.hpp"
#include "swbreak/profile.hpp"

namespace swbreak {

using detail::Jet;

void SeedParams::validate() const {
  if (!(delta >= 1e-3 && delta <= 1e-1))
    throw DomainError("seed delta outside supported window [1e-3, 1e-1]");
  if (!(M >= 10.0 && M <= 1e3)) throw DomainError("seed M outside supported window [10, 1e3]");
  if (!(kappa0 > 0.0)) throw DomainError("seed kappa0 must be positive");
}

namespace {

// Glue S(t) = psi(t)/(psi(t)+psi(1-t)) with psi(t) = exp(-1/t); S(0)=0, S(1)=1.
Jet glue_s(const Jet& t) {
  const Jet one = Jet::constant(1.0);
  const Jet psi = (Jet::constant(0.0) - t.reciprocal()).exp();
  const Jet psi_mirror = (Jet::constant(0.0) - (one - t).reciprocal()).exp();
  return psi / (psi + psi_mirror);
}

// Jet of the even cutoff at r (all six coefficients).
Jet cutoff_jet(double r) {
  const double a = std::abs(r);
  if (a <= 0.5) return Jet::constant(1.0);
  if (a >= 1.0) return Jet::constant(0.0);
  // phi(r) = 1 - S(2|r| - 1); propagate d|r|/dr = sign(r) through the jet.
  Jet t = Jet::constant(2.0 * a - 1.0);
  t.c[1] = 2.0 * (r < 0.0 ? -1.0 : 1.0);
  return Jet::constant(1.0) - glue_s(t);
}

// Jet of amp * y^3 * exp(-(y-c)^2/4) at y.
Jet bump_jet(double y, double amp, double center) {
  const Jet yj = Jet::variable(y);
  const Jet shift = yj - Jet::constant(center);
  const Jet arg = -0.25 * (shift * shift);
  return amp * (yj * yj * yj * arg.exp());
}

// Jet of sech^2(t) = 4 / (e^t + e^-t)^2.
Jet sech2_jet(const Jet& t) {
  const Jet e = t.exp();
  const Jet den = e + e.reciprocal();
  return 4.0 * (den * den).reciprocal();
}

void check_order5(int k) {
  if (k < 0 || k > 5) throw DomainError("seed derivative order must be in 0..5");
}

}  // namespace

double glue_cutoff(double r, int k) {
  check_order5(k);
  if (!std::isfinite(r)) throw DomainError("glue_cutoff at non-finite point");
  return cutoff_jet(r).deriv(k);
}

SelfSimilarSeed::SelfSimilarSeed(const SeedParams& params, const SeedOptions& opts)
    : params_(params), bump_amp_(opts.bump_amp), extra_bumps_(opts.extra_bumps) {
  params_.validate();
  const double delta = params_.delta;
  z_amp_ = opts.z_amp >= 0.0 ? opts.z_amp : std::min(0.25 * params_.M * delta, 0.25);

  const double fs_min = std::pow(delta, -1.5);
  if (opts.far_scale != 0.0 && opts.far_scale < fs_min)
    throw ConstructionError("far_scale below delta^{-3/2}");

  // Choose the smallest cutoff scale keeping |dW0/dy| <= 0.9*delta beyond
  // |y| = delta^{-3/2}/2 (the product rule contributes |Wbar * phi'| / fs).
  auto far_slope_ok = [&](double fs) {
    far_scale_ = fs;
    const double lo = 0.5 * fs_min;
    const double hi = fs;
    for (int i = 0; i <= 2048; ++i) {
      const double y = lo * std::pow(hi / lo, double(i) / 2048.0);
      if (std::abs(W0_deriv(y, 1)) > 0.9 * delta) return false;
    }
    return true;
  };
  if (opts.far_scale != 0.0) {
    far_scale_ = opts.far_scale;
    if (!far_slope_ok(opts.far_scale))
      throw ConstructionError("far_scale too small for the far-field slope bound");
  } else {
    double fs = fs_min;
    bool ok = false;
    for (int i = 0; i < 64 && !ok; ++i) {
      ok = far_slope_ok(fs);
      if (!ok) fs *= 1.25;
    }
    if (!ok) throw ConstructionError("no admissible far_scale found");
    far_scale_ = fs;
  }
}

double SelfSimilarSeed::support_x() const {
  return far_scale_ * std::pow(params_.delta, 1.5);
}

double SelfSimilarSeed::bumps_deriv(double y, int k) const {
  if (bump_amp_ == 0.0 && extra_bumps_.empty()) return 0.0;
  Jet total = Jet::constant(0.0);
  if (bump_amp_ != 0.0) total = total + bump_jet(y, bump_amp_, 0.0);
  for (const auto& [amp, center] : extra_bumps_) total = total + bump_jet(y, amp, center);
  return total.deriv(k);
}

double SelfSimilarSeed::W0_deriv(double y, int k) const {
  check_order5(k);
  if (std::abs(y) >= far_scale_) return 0.0;  // outside the cutoff support
  // (Wbar + bumps) * phi(y/fs), as jets.
  Jet base;
  static constexpr double fact[6] = {1, 1, 2, 6, 24, 120};
  for (int j = 0; j < 6; ++j) base.c[j] = eval_profile_deriv(y, j) / fact[j];
  if (bump_amp_ != 0.0 || !extra_bumps_.empty()) {
    Jet b = Jet::constant(0.0);
    if (bump_amp_ != 0.0) b = b + bump_jet(y, bump_amp_, 0.0);
    for (const auto& [amp, center] : extra_bumps_) b = b + bump_jet(y, amp, center);
    base = base + b;
  }
  Jet phi = cutoff_jet(y / far_scale_);
  for (int j = 1; j < 6; ++j) phi.c[j] *= std::pow(far_scale_, -j);
  return (base * phi).deriv(k);
}

double SelfSimilarSeed::Z0_deriv(double y, int k) const {
  check_order5(k);
  if (std::abs(y) >= far_scale_) return 0.0;  // outside the cutoff support
  const double lam = std::pow(params_.delta, 1.5);
  // Evaluate at |y| and reflect, so the even symmetry of Z0 is bit-exact.
  Jet t = Jet::variable(lam * std::abs(y));
  t.c[1] = lam;
  Jet s2 = sech2_jet(t);
  if (y < 0.0)
    for (int j = 1; j < 6; j += 2) s2.c[j] = -s2.c[j];
  Jet phi = cutoff_jet(y / far_scale_);
  for (int j = 1; j < 6; ++j) phi.c[j] *= std::pow(far_scale_, -j);
  return z_amp_ * (s2 * phi).deriv(k);
}

double SelfSimilarSeed::Wtilde0_deriv(double y, int k) const {
  return W0_deriv(y, k) - eval_profile_deriv(y, k);
}

namespace {

struct RegionGrids {
  std::vector<double> near, middle, far;
};

RegionGrids region_grids(const SelfSimilarSeed& seed) {
  const double ell = seed.params().ell();
  const double mid_hi = 0.5 * std::pow(seed.params().delta, -1.5);
  const double far_hi = 1.2 * seed.far_scale();
  RegionGrids g;
  for (int i = 0; i <= 512; ++i) {
    const double y = ell * double(i) / 512.0;
    g.near.push_back(y);
    g.near.push_back(-y);
  }
  const int mid_n = int(std::ceil(96.0 * std::log10(mid_hi / ell)));
  for (int i = 0; i <= mid_n; ++i) {
    const double y = ell * std::pow(mid_hi / ell, double(i) / double(mid_n));
    g.middle.push_back(y);
    g.middle.push_back(-y);
  }
  const int far_n = 2048;
  for (int i = 0; i <= far_n; ++i) {
    const double y = mid_hi * std::pow(far_hi / mid_hi, double(i) / double(far_n));
    g.far.push_back(y);
    g.far.push_back(-y);
  }
  return g;
}

// Evaluate max |f| over ys against a threshold.
template <typename F>
SeedCheck sup_check(const std::string& id, const std::string& region,
                    const std::vector<double>& ys, double threshold, F&& f) {
  SeedCheck c;
  c.id = id;
  c.region = region;
  c.threshold = threshold;
  for (double y : ys) {
    const double v = std::abs(f(y));
    if (v > c.worst_value) {
      c.worst_value = v;
      c.worst_y = y;
    }
  }
  c.margin = c.threshold - c.worst_value;
  c.pass = c.margin >= 0.0;
  return c;
}

template <typename F>
SeedCheck weighted_check(const std::string& id, const std::string& region,
                         const std::vector<double>& ys, F&& ratio) {
  // ratio(y) = |measured| / allowed; pass iff sup ratio <= 1
  SeedCheck c;
  c.id = id;
  c.region = region;
  c.threshold = 1.0;
  for (double y : ys) {
    const double v = ratio(y);
    if (v > c.worst_value) {
      c.worst_value = v;
      c.worst_y = y;
    }
  }
  c.margin = c.threshold - c.worst_value;
  c.pass = c.margin >= 0.0;
  return c;
}

}  // namespace

SeedReport verify_seed(const SelfSimilarSeed& seed) {
  const SeedParams& p = seed.params();
  const double delta = p.delta;
  const double ell = p.ell();
  const double d12 = std::pow(delta, 1.0 / 12.0);
  const auto g = region_grids(seed);

  SeedReport rep;
  auto& cs = rep.checks;

  // Origin pins.
  {
    SeedCheck c;
    c.id = "origin_pins";
    c.region = "origin";
    c.threshold = 1e-12;
    const double v0 = std::abs(seed.W0(0.0));
    const double v1 = std::abs(seed.W0_deriv(0.0, 1) + 1.0);
    const double v2 = std::abs(seed.W0_deriv(0.0, 2));
    c.worst_value = std::max({v0, v1, v2});
    c.margin = c.threshold - c.worst_value;
    c.pass = c.margin >= 0.0;
    cs.push_back(c);
  }
  // The origin slope is the global minimum (>= -1 everywhere, -1 at 0).
  {
    SeedCheck c;
    c.id = "slope_floor";
    c.region = "global";
    c.threshold = 1.0 + 1e-12;
    for (const auto* ys : {&g.near, &g.middle, &g.far})
      for (double y : *ys) {
        const double v = -seed.W0_deriv(y, 1);
        if (v > c.worst_value) {
          c.worst_value = v;
          c.worst_y = y;
        }
      }
    c.margin = c.threshold - c.worst_value;
    c.pass = c.margin >= 0.0;
    cs.push_back(c);
  }

  auto wt = [&](double y, int k) { return seed.Wtilde0_deriv(y, k); };

  cs.push_back(sup_check("near_value", "near", g.near, 0.5 * d12 * std::pow(ell, 4),
                         [&](double y) { return wt(y, 0); }));
  cs.push_back(weighted_check("middle_value", "middle", g.middle, [&](double y) {
    return std::abs(wt(y, 0)) / (d12 * std::cbrt(jbracket(y)));
  }));
  cs.push_back(sup_check("near_slope", "near", g.near, 0.5 * d12 * std::pow(ell, 3),
                         [&](double y) { return wt(y, 1); }));
  cs.push_back(weighted_check("middle_slope", "middle", g.middle, [&](double y) {
    return std::abs(wt(y, 1)) / (d12 * std::pow(jbracket(y), -2.0 / 3.0));
  }));
  cs.push_back(sup_check("far_slope", "far", g.far, delta,
                         [&](double y) { return seed.W0_deriv(y, 1); }));
  cs.push_back(sup_check("near_curvature", "near", g.near, 0.5 * d12 * ell * ell,
                         [&](double y) { return wt(y, 2); }));
  {
    // second derivative of W0 itself beyond |y| = ell
    std::vector<double> beyond(g.middle);
    beyond.insert(beyond.end(), g.far.begin(), g.far.end());
    cs.push_back(sup_check("outer_curvature", "middle+far", beyond, std::pow(p.M, 0.1),
                           [&](double y) { return seed.W0_deriv(y, 2); }));
  }
  cs.push_back(sup_check("near_third", "near", g.near, 0.5 * d12 * ell,
                         [&](double y) { return wt(y, 3); }));
  cs.push_back(sup_check("near_fourth", "near", g.near, 0.25 * d12,
                         [&](double y) { return wt(y, 4); }));
  {
    std::vector<double> all(g.near);
    all.insert(all.end(), g.middle.begin(), g.middle.end());
    all.insert(all.end(), g.far.begin(), g.far.end());
    cs.push_back(sup_check("global_fourth", "global", all, 0.5 * p.M,
                           [&](double y) { return seed.W0_deriv(y, 4); }));
    cs.push_back(sup_check("global_sup", "global", all, 0.5 * p.M / std::sqrt(delta),
                           [&](double y) { return seed.W0(y) + p.kappa0 / std::sqrt(delta); }));
    cs.push_back(sup_check("origin_third", "origin", {0.0}, 0.25 * std::pow(delta, 1.0 / 9.0),
                           [&](double y) { return wt(y, 3); }));
    cs.push_back(sup_check("z_sup", "global", all, 0.5 * p.M * delta,
                           [&](double y) { return seed.Z0(y); }));
    cs.push_back(sup_check("z_slope", "global", all, 0.5 * p.M * std::pow(delta, 5.0 / 6.0),
                           [&](double y) { return seed.Z0_deriv(y, 1); }));
    cs.push_back(sup_check("z_fourth", "global", all, 0.5 * p.M * std::pow(delta, 2.0 / 3.0),
                           [&](double y) { return seed.Z0_deriv(y, 4); }));
  }

  rep.pass = std::all_of(cs.begin(), cs.end(), [](const SeedCheck& c) { return c.pass; });
  return rep;
}

RiemannState seed_to_riemann(const SelfSimilarSeed& seed, const Grid& g) {
  const double delta = seed.params().delta;
  const double kappa0 = seed.params().kappa0;
  if (g.length < 2.05 * seed.support_x())
    throw ConstructionError("grid period too small for the seed support");
  const double scale = std::pow(delta, -1.5);
  RiemannState state(g, -delta);
  for (std::size_t i = 0; i < g.n; ++i) {
    const double y = g.x(i) * scale;
    state.w[i] = std::sqrt(delta) * seed.W0(y) + kappa0;
    state.z[i] = seed.Z0(y);
    if (!(state.w[i] - state.z[i] > 0.0))
      throw ConstructionError("seed touches vacuum at x = " + std::to_string(g.x(i)));
  }
  return state;
}

PhysicalState seed_to_physical(const SelfSimilarSeed& seed, const Grid& g, const Topography& topo,
                               const ModelParams& p) {
  const RiemannState r = seed_to_riemann(seed, g);
  PhysicalState phys = to_physical(from_riemann(r), topo, p);
  to_depth(phys, topo, p);  // asserts non-cavitation
  return phys;
}

}  // namespace swbreak
