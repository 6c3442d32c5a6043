#include "swbreak/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "swbreak/errors.hpp"

namespace swbreak {

void SolverConfig::validate() const {
  if (!(cfl > 0.0 && cfl <= 0.5)) throw DomainError("cfl must lie in (0, 0.5]");
  if (!(stop_slope_factor > 0.0 && stop_slope_factor < 1.0))
    throw DomainError("stop_slope_factor must lie in (0, 1)");
  if (max_steps == 0) throw DomainError("max_steps must be positive");
  if (std::isnan(t_end)) throw DomainError("t_end is NaN");
}

namespace {

// Copy a periodic field into a buffer with 3 ghost nodes on each side, so
// the stencils below never wrap indices.
void pad(const std::vector<double>& src, std::vector<double>& buf) {
  const std::size_t n = src.size();
  buf.resize(n + 6);
  std::memcpy(buf.data() + 3, src.data(), n * sizeof(double));
  for (int j = 0; j < 3; ++j) {
    buf[j] = src[n - 3 + j];
    buf[n + 3 + j] = src[j];
  }
}

// 5th-order upwind-biased first derivative at node i of a padded field.
inline double upwind(const double* p, std::size_t i, double speed, double inv60dx) {
  if (speed >= 0.0)
    return (-2 * p[i - 3] + 15 * p[i - 2] - 60 * p[i - 1] + 20 * p[i] + 30 * p[i + 1] -
            3 * p[i + 2]) *
           inv60dx;
  return (2 * p[i + 3] - 15 * p[i + 2] + 60 * p[i + 1] - 20 * p[i] - 30 * p[i - 1] +
          3 * p[i - 2]) *
         inv60dx;
}

struct Workspace {
  std::vector<double> force;              // (3/4) beta* db/dx at nodes
  std::vector<double> pw, pz;             // padded stage fields
  std::vector<double> ws, zs;             // stage state
  std::vector<double> kw, kz, accw, accz; // stage slopes and their RK4 sum
};

void rhs(const std::vector<double>& w, const std::vector<double>& z, Workspace& wk,
         std::vector<double>& dw, std::vector<double>& dz, double inv60dx) {
  const std::size_t n = w.size();
  pad(w, wk.pw);
  pad(z, wk.pz);
  const double* pw = wk.pw.data() + 3;
  const double* pz = wk.pz.data() + 3;
  const double* f = wk.force.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double lw = w[i] + z[i] * (1.0 / 3.0);
    const double lz = w[i] * (1.0 / 3.0) + z[i];
    dw[i] = -lw * upwind(pw, i, lw, inv60dx) - f[i];
    dz[i] = -lz * upwind(pz, i, lz, inv60dx) - f[i];
  }
}

StepRecord make_record(const RiemannState& st, std::size_t step, double dt, Workspace& wk) {
  const std::size_t n = st.grid.n;
  const double dx = st.grid.dx();
  StepRecord r;
  r.step = step;
  r.t = st.t;
  r.dt = dt;

  pad(st.w, wk.pw);
  const double* p = wk.pw.data() + 3;
  const double c = 1.0 / (12.0 * dx);
  r.min_slope = std::numeric_limits<double>::infinity();
  std::size_t imin = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = (-p[i + 2] + 8 * p[i + 1] - 8 * p[i - 1] + p[i - 2]) * c;
    if (s < r.min_slope) {
      r.min_slope = s;
      imin = i;
    }
  }
  r.argmin_x = st.grid.x(imin);

  r.min_gap = std::numeric_limits<double>::infinity();
  r.max_speed = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double gap = st.w[i] - st.z[i];
    r.min_gap = std::min(r.min_gap, gap);
    mass += gap * gap;
    r.max_speed = std::max({r.max_speed, std::abs(st.w[i] + st.z[i] / 3.0),
                            std::abs(st.w[i] / 3.0 + st.z[i])});
  }
  r.mass = mass * dx / 9.0;
  return r;
}

void check_state(const StepRecord& r) {
  if (!std::isfinite(r.mass) || !std::isfinite(r.min_slope))
    throw SolverError("non-finite state at t = " + std::to_string(r.t) + " (step " +
                      std::to_string(r.step) + ")");
  if (r.min_gap <= 0.0)
    throw SolverError("vacuum (w - z <= 0) at t = " + std::to_string(r.t) + " near x = " +
                      std::to_string(r.argmin_x));
}

}  // namespace

SolveResult solve(RiemannState initial, const Topography& topo, const ModelParams& params,
                  const SolverConfig& config, const StepObserver& observer) {
  config.validate();
  params.validate();
  const Grid g = initial.grid;
  const std::size_t n = g.n;
  const double dx = g.dx();
  const double inv60dx = 1.0 / (60.0 * dx);
  if (!(initial.t < config.t_end))
    throw DomainError("initial time is not below t_end");

  Workspace wk;
  wk.force.assign(n, 0.0);
  if (params.beta_star != 0.0 && !topo.is_flat())
    for (std::size_t i = 0; i < n; ++i) wk.force[i] = 0.75 * params.beta_star * topo.deriv(g.x(i), 1);
  wk.ws.resize(n);
  wk.zs.resize(n);
  wk.kw.resize(n);
  wk.kz.resize(n);
  wk.accw.resize(n);
  wk.accz.resize(n);

  RiemannState st = std::move(initial);
  const double slope_stop = -config.stop_slope_factor / dx;

  SolveResult out{RiemannState(g), StepRecord{}, StopReason::time_cap, 0};
  StepRecord rec = make_record(st, 0, 0.0, wk);
  check_state(rec);

  auto finish = [&](StopReason why) {
    out.state = std::move(st);
    out.final_record = rec;
    out.reason = why;
    return std::move(out);
  };

  if (observer && !observer(st, rec)) return finish(StopReason::observer);
  if (rec.min_slope <= slope_stop) return finish(StopReason::slope_threshold);

  for (std::size_t step = 1;; ++step) {
    if (out.steps >= config.max_steps) return finish(StopReason::step_cap);

    double dt = config.cfl * dx / std::max(rec.max_speed, 1e-30);
    bool last = false;
    if (std::isfinite(config.t_end)) {
      const double remaining = config.t_end - st.t;
      if (remaining <= dt * (1.0 + 1e-9)) {
        dt = remaining;
        last = true;
      }
    }

    // Classic RK4 on (w, z).
    rhs(st.w, st.z, wk, wk.kw, wk.kz, inv60dx);
    for (std::size_t i = 0; i < n; ++i) {
      wk.accw[i] = wk.kw[i];
      wk.accz[i] = wk.kz[i];
      wk.ws[i] = st.w[i] + 0.5 * dt * wk.kw[i];
      wk.zs[i] = st.z[i] + 0.5 * dt * wk.kz[i];
    }
    rhs(wk.ws, wk.zs, wk, wk.kw, wk.kz, inv60dx);
    for (std::size_t i = 0; i < n; ++i) {
      wk.accw[i] += 2.0 * wk.kw[i];
      wk.accz[i] += 2.0 * wk.kz[i];
      wk.ws[i] = st.w[i] + 0.5 * dt * wk.kw[i];
      wk.zs[i] = st.z[i] + 0.5 * dt * wk.kz[i];
    }
    rhs(wk.ws, wk.zs, wk, wk.kw, wk.kz, inv60dx);
    for (std::size_t i = 0; i < n; ++i) {
      wk.accw[i] += 2.0 * wk.kw[i];
      wk.accz[i] += 2.0 * wk.kz[i];
      wk.ws[i] = st.w[i] + dt * wk.kw[i];
      wk.zs[i] = st.z[i] + dt * wk.kz[i];
    }
    rhs(wk.ws, wk.zs, wk, wk.kw, wk.kz, inv60dx);
    const double w6 = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
      st.w[i] += w6 * (wk.accw[i] + wk.kw[i]);
      st.z[i] += w6 * (wk.accz[i] + wk.kz[i]);
    }
    st.t = last ? config.t_end : st.t + dt;
    out.steps = step;

    rec = make_record(st, step, dt, wk);
    check_state(rec);
    if (observer && !observer(st, rec)) return finish(StopReason::observer);
    if (rec.min_slope <= slope_stop) return finish(StopReason::slope_threshold);
    if (last) return finish(StopReason::time_cap);
  }
}

std::vector<double> slope_field(const std::vector<double>& f, const Grid& g) {
  if (f.size() != g.n) throw DomainError("slope_field: field size does not match grid");
  std::vector<double> buf;
  pad(f, buf);
  const double* p = buf.data() + 3;
  const double c = 1.0 / (12.0 * g.dx());
  std::vector<double> out(g.n);
  for (std::size_t i = 0; i < g.n; ++i)
    out[i] = (-p[i + 2] + 8 * p[i + 1] - 8 * p[i - 1] + p[i - 2]) * c;
  return out;
}

double burgers_exact(const std::function<double(double)>& u0, double x, double t, double u_min,
                     double u_max) {
  if (!(t >= 0.0)) throw DomainError("burgers_exact: t must be >= 0");
  if (!(u_min <= u_max)) throw DomainError("burgers_exact: u_min must not exceed u_max");
  if (t == 0.0) return u0(x);
  double lo = x - t * u_max;
  double hi = x - t * u_min;
  auto residual = [&](double s) { return s + t * u0(s) - x; };
  if (residual(lo) > 0.0 || residual(hi) < 0.0)
    throw SolverError("burgers_exact: characteristic foot escapes [u_min, u_max] bracket");
  for (int it = 0; it < 200 && hi - lo > 1e-16 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) <= 0.0 ? lo : hi) = mid;
  }
  return u0(0.5 * (lo + hi));
}

}  // namespace swbreak
