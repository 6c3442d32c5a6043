#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "swbreak/errors.hpp"
#include "swbreak/solver.hpp"

using namespace swbreak;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// The reference wave: w0 = 3 - 0.1 sin x, so the decoupled equation blows up
// at t = 1/0.1 = 10.
double w0_ref(double x) { return 3.0 - 0.1 * std::sin(x); }

RiemannState make_state(const Grid& g, double (*wf)(double), double zconst) {
  RiemannState st(g);
  for (std::size_t i = 0; i < g.n; ++i) {
    st.w[i] = wf(g.x(i));
    st.z[i] = zconst;
  }
  return st;
}

}  // namespace

TEST_CASE("slope_field: spectral test function and size guard") {
  const Grid g(256, 0.0, 2 * kPi);
  std::vector<double> f(g.n);
  for (std::size_t i = 0; i < g.n; ++i) f[i] = std::sin(3.0 * g.x(i));
  const auto s = slope_field(f, g);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.n; ++i)
    worst = std::max(worst, std::abs(s[i] - 3.0 * std::cos(3.0 * g.x(i))));
  CHECK(worst < 5e-6);  // 4th-order: (dx^4/30)*|f^(5)| ~ 3e-6
  CHECK_THROWS_AS(slope_field(std::vector<double>(100, 0.0), g), const DomainError&);
}

TEST_CASE("burgers_exact: characteristic identities") {
  auto u0 = [](double x) { return 3.0 - 0.1 * std::sin(x); };
  // t = 0 short-circuits to the initial profile.
  CHECK(burgers_exact(u0, 1.234, 0.0, 2.9, 3.1) == u0(1.234));
  // u is constant along x = x0 + t*u0(x0).
  for (double x0 : {0.3, 1.7, 4.0, -2.0}) {
    for (double t : {0.5, 2.0, 7.0}) {
      const double x = x0 + t * u0(x0);
      CHECK(burgers_exact(u0, x, t, 2.9, 3.1) == doctest::Approx(u0(x0)).epsilon(1e-12));
    }
  }
  // Small-time Taylor: u ~ u0 - t u0 u0'.
  const double t = 1e-4;
  for (double x : {0.0, 0.9, 2.5}) {
    const double lin = u0(x) + t * (-u0(x)) * (-0.1 * std::cos(x));
    CHECK(std::abs(burgers_exact(u0, x, t, 2.9, 3.1) - lin) < 1e-7);
  }
  CHECK_THROWS_AS(burgers_exact(u0, 0.0, -1.0, 2.9, 3.1), const DomainError&);
  CHECK_THROWS_AS(burgers_exact(u0, 0.0, 1.0, 3.1, 2.9), const DomainError&);
  // A bracket that excludes the true characteristic foot is rejected.
  CHECK_THROWS_AS(burgers_exact(u0, -kPi / 2 + 5.0 * 3.1, 5.0, 2.95, 3.05), const SolverError&);
}

TEST_CASE("solve: constant states are fixed points up to roundoff") {
  const Grid g(64, 0.0, 2 * kPi);
  RiemannState st(g);
  for (std::size_t i = 0; i < g.n; ++i) {
    st.w[i] = 3.0;
    st.z[i] = -1.0;
  }
  SolverConfig cfg;
  cfg.t_end = 0.5;
  const SolveResult res = solve(st, Topography::flat(), ModelParams{}, cfg);
  CHECK(res.reason == StopReason::time_cap);
  CHECK(res.state.t == 0.5);
  for (std::size_t i = 0; i < g.n; ++i) {
    CHECK(std::abs(res.state.w[i] - 3.0) < 1e-11);
    CHECK(std::abs(res.state.z[i] + 1.0) < 1e-11);
  }
  CHECK(res.final_record.mass == doctest::Approx(16.0 / 9.0 * 2 * kPi).epsilon(1e-12));
}

TEST_CASE("solve: topographic forcing matches the short-time expansion") {
  // From rest-like constant data over b = sin x, the immediate response is
  // dw/dt = dz/dt = -(3/4) beta* b'(x), then the transport tilts it.
  const Grid g(256, 0.0, 2 * kPi);
  const Topography b = Topography::sine(1.0, 1, 0.0, 2 * kPi);
  ModelParams mp;
  mp.beta_star = 0.8;
  RiemannState st(g);
  const double cw = 2.0, cz = -1.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    st.w[i] = cw;
    st.z[i] = cz;
  }
  SolverConfig cfg;
  cfg.t_end = 1e-3;
  const SolveResult res = solve(st, b, mp, cfg);
  const double t = 1e-3;
  const double lw = cw + cz / 3.0, lz = cw / 3.0 + cz;
  double worst_w = 0.0, worst_z = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    const double x = g.x(i);
    const double f = 0.75 * mp.beta_star * std::cos(x);   // forcing
    const double fp = -0.75 * mp.beta_star * std::sin(x); // its x-derivative
    worst_w = std::max(worst_w, std::abs(res.state.w[i] - (cw - f * t + 0.5 * lw * fp * t * t)));
    worst_z = std::max(worst_z, std::abs(res.state.z[i] - (cz - f * t + 0.5 * lz * fp * t * t)));
  }
  CHECK(worst_w < 1e-8);
  CHECK(worst_z < 1e-8);
}

TEST_CASE("solve: constant z rides along while w follows the exact solution") {
  const Grid g(1024, 0.0, 2 * kPi);
  const double zbar = -0.5;
  RiemannState st = make_state(g, w0_ref, zbar);
  SolverConfig cfg;
  cfg.t_end = 1.0;
  const SolveResult res = solve(st, Topography::flat(), ModelParams{}, cfg);
  CHECK(res.reason == StopReason::time_cap);

  auto u0 = [&](double x) { return w0_ref(x) + zbar / 3.0; };
  double worst_w = 0.0, worst_z = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    const double u = burgers_exact(u0, g.x(i) , 1.0, 2.9 + zbar / 3.0, 3.1 + zbar / 3.0);
    worst_w = std::max(worst_w, std::abs(res.state.w[i] - (u - zbar / 3.0)));
    worst_z = std::max(worst_z, std::abs(res.state.z[i] - zbar));
  }
  CHECK(worst_z < 1e-11);
  CHECK(worst_w < 1e-9);
}

TEST_CASE("solve: 4th-to-5th order convergence against the exact solution") {
  std::vector<double> errs;
  for (std::size_t n : {256u, 512u, 1024u}) {
    const Grid g(n, 0.0, 2 * kPi);
    RiemannState st = make_state(g, w0_ref, 0.0);
    SolverConfig cfg;
    cfg.t_end = 0.5;
    const SolveResult res = solve(st, Topography::flat(), ModelParams{}, cfg);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.n; ++i)
      worst = std::max(worst,
                       std::abs(res.state.w[i] - burgers_exact(w0_ref, g.x(i), 0.5, 2.9, 3.1)));
    errs.push_back(worst);
  }
  for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
    const double order = std::log2(errs[k] / errs[k + 1]);
    INFO("errors ", errs[k], " -> ", errs[k + 1]);
    CHECK(order > 3.8);
    CHECK(order < 5.8);
  }
  CHECK(errs.back() < 1e-9);
}

TEST_CASE("solve: gradient blowup triggers the slope stop with a faithful time estimate") {
  // The w0_ref wave breaks at T* = 10 with inner width 1.89*(0.1(T*-t))^{3/2},
  // so at n = 1024 the slope reading is honest only while |slope| is a few;
  // the stop must sit inside that resolved regime.
  const Grid g(1024, 0.0, 2 * kPi);
  RiemannState st = make_state(g, w0_ref, 0.0);
  SolverConfig cfg;  // t_end unbounded; the slope threshold must fire
  cfg.stop_slope_factor = 1.5 * g.dx();
  std::size_t calls = 0;
  const SolveResult res = solve(st, Topography::flat(), ModelParams{}, cfg,
                                [&](const RiemannState&, const StepRecord&) {
                                  ++calls;
                                  return true;
                                });
  CHECK(res.reason == StopReason::slope_threshold);
  CHECK(calls == res.steps + 1);  // observer sees the initial state too
  CHECK(res.final_record.min_slope <= -1.5);
  // One-step granularity: the threshold was not overshot by much.
  CHECK(res.final_record.min_slope > -1.6);
  // Blowup-time estimate t + 1/|min slope| lands near the true value 10.
  const double tau_hat = res.state.t + 1.0 / -res.final_record.min_slope;
  CHECK(std::abs(tau_hat - 10.0) < 0.05);
  // The steepest point is the image of x0 = 0, transported at speed 3.
  const double drift = std::fmod(3.0 * res.state.t, 2 * kPi);
  CHECK(std::abs(g.min_image(res.final_record.argmin_x, drift)) < 0.02);
}

TEST_CASE("solve: unit-amplitude breaking wave stops before t = 1.05 at default settings") {
  const Grid g(1024, 0.0, 2 * kPi);
  RiemannState st(g);
  for (std::size_t i = 0; i < g.n; ++i) {
    st.w[i] = 2.0 - std::sin(g.x(i));  // breaks at T* = 1
    st.z[i] = 0.0;
  }
  const SolveResult res = solve(st, Topography::flat(), ModelParams{}, SolverConfig{});
  CHECK(res.reason == StopReason::slope_threshold);
  CHECK(res.state.t < 1.05);
  CHECK(res.state.t > 0.8);
  const double tau_hat = res.state.t + 1.0 / -res.final_record.min_slope;
  CHECK(std::abs(tau_hat - 1.0) < 0.01);
}

TEST_CASE("solve: mass is conserved to truncation level") {
  const Grid g(512, 0.0, 2 * kPi);
  RiemannState st = make_state(g, w0_ref, 0.0);
  SolverConfig cfg;
  cfg.t_end = 1.0;
  double mass0 = -1.0;
  const SolveResult res = solve(st, Topography::flat(), ModelParams{}, cfg,
                                [&](const RiemannState&, const StepRecord& r) {
                                  if (r.step == 0) mass0 = r.mass;
                                  return true;
                                });
  CHECK(mass0 > 0.0);
  CHECK(std::abs(res.final_record.mass - mass0) / mass0 < 1e-10);
}

TEST_CASE("solve: node-shift equivariance is bit-exact") {
  const Grid g(256, 0.0, 2 * kPi);
  const std::size_t shift = 37;
  RiemannState a(g), b(g);
  for (std::size_t i = 0; i < g.n; ++i) {
    a.w[i] = 3.0 - 0.1 * std::sin(g.x(i)) + 0.05 * std::cos(3 * g.x(i));
    a.z[i] = 0.2 * std::cos(g.x(i));
  }
  for (std::size_t i = 0; i < g.n; ++i) {
    b.w[i] = a.w[(i + shift) % g.n];
    b.z[i] = a.z[(i + shift) % g.n];
  }
  SolverConfig cfg;
  cfg.t_end = 0.3;
  const SolveResult ra = solve(a, Topography::flat(), ModelParams{}, cfg);
  const SolveResult rb = solve(b, Topography::flat(), ModelParams{}, cfg);
  CHECK(ra.steps == rb.steps);
  for (std::size_t i = 0; i < g.n; ++i) {
    CHECK(rb.state.w[i] == ra.state.w[(i + shift) % g.n]);
    CHECK(rb.state.z[i] == ra.state.z[(i + shift) % g.n]);
  }
}

TEST_CASE("solve: caps, observer stop, and defect detection") {
  const Grid g(256, 0.0, 2 * kPi);
  SolverConfig cfg;

  SUBCASE("step cap") {
    cfg.max_steps = 7;
    const SolveResult res = solve(make_state(g, w0_ref, 0.0), Topography::flat(), ModelParams{}, cfg);
    CHECK(res.reason == StopReason::step_cap);
    CHECK(res.steps == 7);
  }
  SUBCASE("observer stop") {
    std::size_t calls = 0;
    const SolveResult res = solve(make_state(g, w0_ref, 0.0), Topography::flat(), ModelParams{}, cfg,
                                  [&](const RiemannState&, const StepRecord&) {
                                    return ++calls < 6;
                                  });
    CHECK(res.reason == StopReason::observer);
    CHECK(res.steps == 5);  // initial call + 5 accepted steps
  }
  SUBCASE("initial vacuum is rejected") {
    RiemannState st(g);
    for (std::size_t i = 0; i < g.n; ++i) {
      st.w[i] = 0.05 + 0.2 * std::sin(g.x(i));
      st.z[i] = 0.0;
    }
    CHECK_THROWS_AS(solve(st, Topography::flat(), ModelParams{}, cfg), const SolverError&);
  }
  SUBCASE("non-finite input is rejected") {
    RiemannState st = make_state(g, w0_ref, 0.0);
    st.w[3] = std::nan("");
    CHECK_THROWS_AS(solve(st, Topography::flat(), ModelParams{}, cfg), const SolverError&);
  }
  SUBCASE("config validation") {
    SolverConfig bad;
    bad.cfl = 0.0;
    CHECK_THROWS_AS(bad.validate(), const DomainError&);
    bad = SolverConfig{};
    bad.cfl = 2.0;
    CHECK_THROWS_AS(bad.validate(), const DomainError&);
    bad = SolverConfig{};
    bad.stop_slope_factor = 0.0;
    CHECK_THROWS_AS(bad.validate(), const DomainError&);
    bad = SolverConfig{};
    bad.max_steps = 0;
    CHECK_THROWS_AS(bad.validate(), const DomainError&);
    RiemannState st = make_state(g, w0_ref, 0.0);
    st.t = 1.0;
    SolverConfig cap;
    cap.t_end = 0.5;
    CHECK_THROWS_AS(solve(st, Topography::flat(), ModelParams{}, cap), const DomainError&);
  }
}
