#include "swbreak/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "fft_util.hpp"
#include "swbreak/errors.hpp"

namespace swbreak {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_size(std::size_t field, std::size_t grid, const char* what) {
  if (field != grid) throw DomainError(std::string(what) + ": field length != grid size");
}
}  // namespace

void ModelParams::validate() const {
  if (!(H > 0.0)) throw DomainError("rest depth H must be positive");
  if (!(h_min > 0.0) || !(H > h_min)) throw DomainError("need H > h_min > 0");
  if (eps < 0.0 || eps > 1.0) throw DomainError("eps must lie in [0, 1]");
  if (beta_star < 0.0 || beta_star > 1.0) throw DomainError("beta_star must lie in [0, 1]");
}

DepthState to_depth(const PhysicalState& state, const Topography& topo, const ModelParams& p) {
  p.validate();
  check_size(state.zeta.size(), state.grid.n, "to_depth zeta");
  check_size(state.vbar.size(), state.grid.n, "to_depth vbar");
  DepthState out(state.grid, state.t);
  double worst_h = 1e300;
  std::size_t worst_i = 0;
  for (std::size_t i = 0; i < state.grid.n; ++i) {
    const double h = p.H + p.eps * state.zeta[i] - p.beta_star * topo(state.grid.x(i));
    out.h[i] = h;
    out.u[i] = p.eps * state.vbar[i];
    if (h < worst_h) {
      worst_h = h;
      worst_i = i;
    }
  }
  if (worst_h <= p.h_min)
    throw AdmissibilityError("cavitation: h = " + std::to_string(worst_h) + " <= h_min at node " +
                             std::to_string(worst_i) + " (x = " +
                             std::to_string(state.grid.x(worst_i)) + ")");
  return out;
}

RiemannState to_riemann(const DepthState& state) {
  check_size(state.h.size(), state.grid.n, "to_riemann h");
  check_size(state.u.size(), state.grid.n, "to_riemann u");
  RiemannState out(state.grid, state.t);
  for (std::size_t i = 0; i < state.grid.n; ++i) {
    if (!(state.h[i] > 0.0))
      throw DomainError("to_riemann: nonpositive depth at node " + std::to_string(i));
    const double sigma = 2.0 * std::sqrt(state.h[i]);
    out.w[i] = 0.75 * (state.u[i] + sigma);
    out.z[i] = 0.75 * (state.u[i] - sigma);
  }
  return out;
}

DepthState from_riemann(const RiemannState& state) {
  check_size(state.w.size(), state.grid.n, "from_riemann w");
  check_size(state.z.size(), state.grid.n, "from_riemann z");
  DepthState out(state.grid, state.t);
  for (std::size_t i = 0; i < state.grid.n; ++i) {
    const double diff = state.w[i] - state.z[i];
    if (!(diff > 0.0)) throw DomainError("vacuum: w - z <= 0 at node " + std::to_string(i));
    const double sigma = (2.0 / 3.0) * diff;
    out.u[i] = (2.0 / 3.0) * (state.w[i] + state.z[i]);
    out.h[i] = 0.25 * sigma * sigma;
  }
  return out;
}

PhysicalState to_physical(const DepthState& state, const Topography& topo, const ModelParams& p) {
  p.validate();
  if (!(p.eps > 0.0)) throw DomainError("to_physical requires eps > 0");
  check_size(state.h.size(), state.grid.n, "to_physical h");
  PhysicalState out(state.grid, state.t);
  for (std::size_t i = 0; i < state.grid.n; ++i) {
    out.zeta[i] = (state.h[i] - p.H + p.beta_star * topo(state.grid.x(i))) / p.eps;
    out.vbar[i] = state.u[i] / p.eps;
  }
  return out;
}

double sobolev_seminorm(const std::vector<double>& field, int order, const Grid& g) {
  if (order < 0 || order > 6) throw DomainError("sobolev_seminorm order must be in 0..6");
  check_size(field.size(), g.n, "sobolev_seminorm");
  const auto spec = detail::rfft(field);
  const double inv_n = 1.0 / double(g.n);
  double sum = 0.0;
  // Two-sided Parseval with one-sided storage; m = 0 contributes only at
  // order 0, the Nyquist bin is counted once.
  for (std::size_t m = (order == 0 ? 0 : 1); m < spec.size(); ++m) {
    const double omega = kTwoPi * double(m) / g.length;
    const double c2 = std::norm(spec[m]) * inv_n * inv_n;
    const double weight = (m == 0 || 2 * m == g.n) ? 1.0 : 2.0;
    sum += weight * std::pow(omega, 2 * order) * c2;
  }
  return std::sqrt(g.length * sum);
}

namespace {
void remove_mean(std::vector<double>& f) {
  const double mean = std::accumulate(f.begin(), f.end(), 0.0) / double(f.size());
  for (double& v : f) v -= mean;
}
}  // namespace

ScalingReport moser_scaling_check(const std::vector<double>& zeta0,
                                  const std::vector<double>& vbar0, const Topography& topo,
                                  const Grid& g,
                                  const std::vector<std::pair<double, double>>& eps_beta_pairs,
                                  const ModelParams& base) {
  check_size(zeta0.size(), g.n, "moser_scaling_check zeta0");
  check_size(vbar0.size(), g.n, "moser_scaling_check vbar0");
  ScalingReport rep;
  double lo = 1e300, hi = 0.0;
  for (const auto& [eps, beta] : eps_beta_pairs) {
    ModelParams p = base;
    p.eps = eps;
    p.beta_star = beta;
    PhysicalState phys(g);
    phys.zeta = zeta0;
    phys.vbar = vbar0;
    const RiemannState riem = to_riemann(to_depth(phys, topo, p));
    std::vector<double> w = riem.w, z = riem.z;
    remove_mean(w);
    remove_mean(z);
    const double sw = sobolev_seminorm(w, 5, g);
    const double sz = sobolev_seminorm(z, 5, g);
    ScalingRow row;
    row.eps = eps;
    row.beta_star = beta;
    row.seminorm = std::hypot(sw, sz);
    const double scale = std::max(eps, beta);
    row.ratio = scale > 0.0 ? row.seminorm / scale : 0.0;
    if (scale > 0.0) {
      lo = std::min(lo, row.ratio);
      hi = std::max(hi, row.ratio);
    }
    rep.rows.push_back(row);
  }
  rep.ratio_spread = (hi > 0.0 && lo < 1e300) ? hi / lo : 0.0;
  rep.pass = rep.ratio_spread > 0.0 && rep.ratio_spread < 3.0;
  return rep;
}

}  // namespace swbreak
