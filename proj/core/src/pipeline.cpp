#include "swbreak/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <thread>
#include <utility>

#include <json.hpp>

#include "swbreak/errors.hpp"
#include "swbreak/initial_data.hpp"
#include "swbreak/profile.hpp"
#include "swbreak/version.hpp"

namespace swbreak {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::slope_threshold: return "slope_threshold";
    case StopReason::time_cap: return "time_cap";
    case StopReason::step_cap: return "step_cap";
    case StopReason::observer: return "observer";
  }
  return "unknown";
}

std::string describe_grid(const Grid& g) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "n=%zu x0=%.17g length=%.17g", g.n, g.x0, g.length);
  return buf;
}

std::string frame_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%03zu.csv", i);
  return buf;
}

void write_json(const fs::path& path, const ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

// Initial condition plus the geometry it lives on.
struct InitialData {
  Grid grid;
  Topography topo;
  std::optional<SeedReport> seed_report;
  RiemannState state;
};

RiemannState load_field_files(const RunConfig& cfg, Grid& grid_out) {
  const CsvTable tw = read_csv(cfg.w_file);
  const CsvTable tz = read_csv(cfg.z_file);
  const std::size_t cx = tw.col("x"), cw = tw.col("w");
  const std::size_t czx = tz.col("x"), cz = tz.col("z");
  const std::size_t n = tw.rows.size();
  if (n < 8) throw IoError("field file '" + cfg.w_file + "': need at least 8 rows");
  if (tz.rows.size() != n)
    throw IoError("field files disagree on node count (" + std::to_string(n) + " vs " +
                  std::to_string(tz.rows.size()) + ")");
  const double x0 = tw.rows[0][cx];
  const double dx = n > 1 ? tw.rows[1][cx] - x0 : 0.0;
  if (!(dx > 0.0)) throw IoError("field file nodes must be ascending");
  const double tol = 1e-9 * static_cast<double>(n) * dx;
  for (std::size_t i = 0; i < n; ++i) {
    const double want = x0 + static_cast<double>(i) * dx;
    if (std::abs(tw.rows[i][cx] - want) > tol)
      throw IoError("field file nodes must be uniformly spaced");
    if (std::abs(tz.rows[i][czx] - want) > tol)
      throw IoError("field files disagree on node positions");
  }
  grid_out = Grid(n, x0, static_cast<double>(n) * dx);
  RiemannState st(grid_out, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    st.w[i] = tw.rows[i][cw];
    st.z[i] = tz.rows[i][cz];
  }
  return st;
}

InitialData build_initial(const RunConfig& cfg, bool want_report) {
  if (cfg.seed_kind == "files") {
    Grid g;
    RiemannState st = load_field_files(cfg, g);
    return {g, cfg.make_topography(g.length), {}, std::move(st)};
  }
  const Grid grid = cfg.make_grid();
  Topography topo = cfg.make_topography(grid.length);
  if (cfg.seed_kind == "constructed") {
    const SelfSimilarSeed seed(cfg.seed, cfg.make_seed_options());
    std::optional<SeedReport> report;
    if (want_report) report = verify_seed(seed);
    RiemannState st = seed_to_riemann(seed, grid);
    st.t = cfg.initial_time();
    return {grid, std::move(topo), std::move(report), std::move(st)};
  }
  if (cfg.seed_kind == "sine") {
    RiemannState st(grid, 0.0);
    const double k = 2.0 * kPi * cfg.sine_mode / grid.length;
    for (std::size_t i = 0; i < grid.n; ++i)
      st.w[i] = cfg.seed.kappa0 - cfg.sine_amp * std::sin(k * grid.x(i));
    return {grid, std::move(topo), {}, std::move(st)};
  }
  // rest: surface/velocity shapes through the (eps, beta*) scaling
  PhysicalState phys(grid, 0.0);
  const double kz = 2.0 * kPi * cfg.shape_zeta_mode / grid.length;
  const double kv = 2.0 * kPi * cfg.shape_vbar_mode / grid.length;
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double x = grid.x(i);
    phys.zeta[i] = cfg.shape_zeta_amp * std::sin(kz * x);
    phys.vbar[i] = cfg.shape_vbar_amp * std::sin(kv * x);
  }
  RiemannState st = to_riemann(to_depth(phys, topo, cfg.model));
  return {grid, std::move(topo), {}, std::move(st)};
}

// Nothing can ever steepen: both fields start flat and there is no forcing.
bool cannot_steepen(const RiemannState& st, const Topography& topo, const ModelParams& p) {
  if (p.beta_star * topo.max_abs_deriv(1) != 0.0) return false;
  double worst = 0.0;
  for (const auto* f : {&st.w, &st.z})
    for (double v : slope_field(*f, st.grid)) worst = std::max(worst, std::abs(v));
  return worst <= 1e-12;
}

struct DiagNotes {
  std::string blowup, rate, cusp, convergence, bootstrap, trajectories;
};

std::string join_notes(const DiagNotes& n) {
  std::string out;
  auto add = [&](const char* tag, const std::string& msg) {
    if (msg.empty()) return;
    if (!out.empty()) out += "; ";
    out += tag;
    out += ": ";
    out += msg;
  };
  add("blowup", n.blowup);
  add("rate", n.rate);
  add("cusp", n.cusp);
  add("convergence", n.convergence);
  add("bootstrap", n.bootstrap);
  add("trajectories", n.trajectories);
  return out;
}

Verdict build_verdict(const RunArtifacts& art, const DiagNotes& notes) {
  const RunConfig& cfg = art.config;
  Verdict v;

  {
    VerdictItem it;
    it.id = "construction";
    if (cfg.seed_kind != "constructed") {
      it.status = "not_evaluated";
      it.note = "applies to constructed seeds only";
    } else if (!art.blowup) {
      it.status = "not_evaluated";
      it.note = notes.blowup.empty() ? "no blowup estimate" : notes.blowup;
    } else {
      const double t_bound = 2.0 * cfg.seed.M * std::pow(cfg.seed.delta, 4.0 / 3.0);
      const double x_bound = 2.0 * cfg.seed.M * cfg.seed.delta;
      const bool ok =
          std::abs(art.blowup->t_star) <= t_bound && std::abs(art.blowup->x_star) <= x_bound;
      it.status = ok ? "pass" : "fail";
      if (!ok) it.note = "blowup landed outside the designed window";
      it.evidence = {{"t_star", art.blowup->t_star},
                     {"t_bound", t_bound},
                     {"x_star", art.blowup->x_star},
                     {"x_bound", x_bound}};
    }
    v.items.push_back(std::move(it));
  }

  {
    VerdictItem it;
    it.id = "uniform-bound";
    if (art.marks.empty()) {
      it.status = "not_evaluated";
      it.note = "no snapshots recorded";
    } else {
      const double wmax = *std::max_element(art.max_abs_w.begin(), art.max_abs_w.end());
      const double zmax = *std::max_element(art.max_abs_z.begin(), art.max_abs_z.end());
      const double bound = cfg.seed.M;
      const bool ok = std::max(wmax, zmax) <= bound;
      it.status = ok ? "pass" : "fail";
      if (!ok) it.note = "field amplitude exceeded the configured largeness parameter";
      it.evidence = {{"max_abs_w", wmax}, {"max_abs_z", zmax}, {"bound", bound}};
    }
    v.items.push_back(std::move(it));
  }

  {
    VerdictItem it;
    it.id = "rate";
    if (!art.rate) {
      it.status = "not_evaluated";
      it.note = notes.rate.empty() ? "no resolved rate window" : notes.rate;
    } else {
      const bool ok = art.rate->in_band && art.rate->continuous;
      it.status = ok ? "pass" : "fail";
      if (!ok)
        it.note = !art.rate->in_band ? "rate product left [1/2, 2]"
                                     : "rate product jumped between snapshots";
      it.evidence = {{"worst_low", art.rate->worst_low},
                     {"worst_high", art.rate->worst_high},
                     {"band_lo", 0.5},
                     {"band_hi", 2.0},
                     {"max_jump", art.rate->max_jump}};
    }
    v.items.push_back(std::move(it));
  }

  {
    VerdictItem it;
    it.id = "cusp";
    if (!art.cusp) {
      it.status = "not_evaluated";
      it.note = notes.cusp.empty() ? "no cusp measurement" : notes.cusp;
    } else {
      const double target = 1.0 / 3.0;
      const double tol = 0.05;
      const bool ok = std::abs(art.cusp->exponent - target) <= tol;
      it.status = ok ? "pass" : "fail";
      if (!ok) it.note = "measured exponent outside 1/3 +- 0.05";
      it.evidence = {{"exponent", art.cusp->exponent},
                     {"target", target},
                     {"tolerance", tol},
                     {"confidence", art.cusp->confidence}};
    }
    v.items.push_back(std::move(it));
  }

  {
    VerdictItem it;
    it.id = "convergence";
    if (!art.convergence) {
      it.status = "not_evaluated";
      it.note = notes.convergence.empty() ? "no frame series" : notes.convergence;
    } else {
      const bool ok = art.convergence->below_threshold && art.convergence->eventually_decreasing;
      it.status = ok ? "pass" : "fail";
      if (!ok)
        it.note = !art.convergence->below_threshold
                      ? "deviation did not end below the threshold"
                      : "deviation not monotone over the final unit of s";
      it.evidence = {{"final_sup", art.convergence->final_sup},
                     {"threshold", art.convergence->threshold},
                     {"y_cap", art.convergence->y_cap},
                     {"eventually_decreasing", art.convergence->eventually_decreasing ? 1.0 : 0.0}};
    }
    v.items.push_back(std::move(it));
  }

  v.all_pass = true;
  for (const VerdictItem& it : v.items)
    if (it.status == "fail") v.all_pass = false;
  return v;
}

ordered_json evidence_json(const std::vector<std::pair<std::string, double>>& ev) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, val] : ev) j[k] = val;
  return j;
}

ordered_json report_json(const RunArtifacts& art) {
  ordered_json j;
  j["t0"] = art.t0;
  j["grid"] = {{"n", art.grid.n},
               {"x0", art.grid.x0},
               {"length", art.grid.length},
               {"dx", art.grid.dx()}};
  j["topo_family"] = art.topo.family();
  j["steps"] = art.steps;
  j["stop_reason"] = stop_reason_name(art.stop);
  j["final"] = {{"t", art.final_record.t},
                {"min_slope", art.final_record.min_slope},
                {"argmin_x", art.final_record.argmin_x},
                {"max_speed", art.final_record.max_speed},
                {"mass", art.final_record.mass},
                {"min_gap", art.final_record.min_gap}};
  j["marks"] = art.marks.size();
  j["frames"] = art.frames.size();
  j["seminorm_h5"] = art.seminorm_h5;
  if (art.seed_report) j["seed_pass"] = art.seed_report->pass;
  j["floor"] = art.floor;
  j["nu"] = art.nu;
  j["nu_source"] = art.nu_source;
  j["lambda_hat"] = art.lambda_hat;
  if (art.nu_estimate)
    j["nu_estimate"] = {{"uncertainty", art.nu_estimate->uncertainty},
                        {"counter_drift", art.nu_estimate->counter_drift},
                        {"reliable", art.nu_estimate->reliable}};
  if (art.blowup)
    j["blowup"] = {{"t_star", art.blowup->t_star},
                   {"x_star", art.blowup->x_star},
                   {"t_uncertainty", art.blowup->t_uncertainty},
                   {"x_uncertainty", art.blowup->x_uncertainty},
                   {"window_begin", art.blowup->window_begin},
                   {"samples", art.blowup->samples}};
  if (art.rate)
    j["rate"] = {{"in_band", art.rate->in_band},
                 {"continuous", art.rate->continuous},
                 {"worst_low", art.rate->worst_low},
                 {"worst_high", art.rate->worst_high},
                 {"max_jump", art.rate->max_jump},
                 {"window_begin", art.rate->window_begin}};
  if (art.cusp)
    j["cusp"] = {{"exponent", art.cusp->exponent},
                 {"confidence", art.cusp->confidence},
                 {"window_lo", art.cusp->window_lo},
                 {"window_hi", art.cusp->window_hi},
                 {"samples", art.cusp->samples}};
  if (art.convergence)
    j["convergence"] = {{"below_threshold", art.convergence->below_threshold},
                        {"eventually_decreasing", art.convergence->eventually_decreasing},
                        {"final_sup", art.convergence->final_sup},
                        {"threshold", art.convergence->threshold},
                        {"y_cap", art.convergence->y_cap}};
  if (!art.bootstrap.empty()) {
    double worst = kInf;
    std::string worst_id;
    double worst_s = 0.0;
    bool all = true;
    for (const BootstrapReport& rep : art.bootstrap) {
      if (!rep.all_pass) all = false;
      for (const InequalityRecord& rec : rep.records) {
        if (rec.region_empty) continue;
        if (rec.margin < worst) {
          worst = rec.margin;
          worst_id = rec.id;
          worst_s = rep.s;
        }
      }
    }
    j["bootstrap"] = {{"frames", art.bootstrap.size()},
                      {"all_pass", all},
                      {"worst_margin", worst},
                      {"worst_id", worst_id},
                      {"worst_s", worst_s}};
  }
  if (!art.trajectories.empty()) {
    auto arr = ordered_json::array();
    for (std::size_t i = 0; i < art.trajectories.size(); ++i) {
      const TrajectoryPath& p = art.trajectories[i];
      arr.push_back({{"y0", art.trajectory_y0[i]},
                     {"family", "W"},
                     {"truncated", p.truncated},
                     {"upper_ok", p.upper_ok},
                     {"lower_applicable", p.lower_applicable},
                     {"lower_ok", p.lower_ok},
                     {"integral", p.integral},
                     {"integral_ok", p.integral_ok}});
    }
    j["trajectories"] = arr;
  }
  if (!art.diagnostics_notes.empty()) j["notes"] = art.diagnostics_notes;
  return j;
}

}  // namespace

std::string Verdict::summary() const {
  std::string out;
  for (const VerdictItem& it : items) {
    if (!out.empty()) out += ' ';
    out += it.id + ":" + it.status;
  }
  return out;
}

RunArtifacts execute_run(const RunConfig& cfg, std::string* stage_out) {
  std::string scratch;
  std::string& stage = stage_out ? *stage_out : scratch;

  stage = "config";
  cfg.validate();

  RunArtifacts art;
  art.config = cfg;
  art.t0 = cfg.initial_time();

  stage = "seed";
  InitialData init = build_initial(cfg, /*want_report=*/true);
  art.grid = init.grid;
  art.topo = init.topo;
  art.seed_report = std::move(init.seed_report);
  if (cfg.t_end == kInf && cannot_steepen(init.state, art.topo, cfg.model))
    throw ConfigError("initial data cannot steepen and no time cap is set; set solver.t_end");
  art.seminorm_h5 = std::hypot(sobolev_seminorm(init.state.w, 5, art.grid),
                               sobolev_seminorm(init.state.z, 5, art.grid));

  stage = "solve";
  SolverConfig scfg;
  scfg.cfl = cfg.cfl;
  scfg.t_end = cfg.t_end;
  scfg.stop_slope_factor = cfg.effective_stop_factor(art.grid.dx());
  scfg.max_steps = cfg.max_steps;

  FrameOptions fopts;
  fopts.y_min = 1e-3;
  fopts.nodes_per_decade = cfg.nodes_per_decade;
  fopts.y_max = 0.0;
  fopts.patch_half_width = 3.2;
  fopts.patch_step = cfg.effective_patch_step();

  // snapshots at geometric levels of the gap estimate tau - t = -1/min_slope,
  // `cadence` of them per decade; the initial state is always recorded
  const double level_ratio = std::pow(10.0, -1.0 / cfg.cadence);
  double next_level = kInf;
  bool first_mark = true;
  std::optional<double> prev_xi;
  const StepObserver observer = [&](const RiemannState& state, const StepRecord& rec) {
    const double gap = rec.min_slope < 0.0 ? -1.0 / rec.min_slope : kInf;
    if (!first_mark && !(gap <= next_level)) return true;
    first_mark = false;
    if (std::isfinite(gap)) {
      if (!std::isfinite(next_level)) next_level = gap;
      while (next_level >= gap) next_level *= level_ratio;
    }
    art.marks.push_back(rec);
    double wmax = 0.0, zmax = 0.0;
    for (std::size_t i = 0; i < state.grid.n; ++i) {
      wmax = std::max(wmax, std::abs(state.w[i]));
      zmax = std::max(zmax, std::abs(state.z[i]));
    }
    art.max_abs_w.push_back(wmax);
    art.max_abs_z.push_back(zmax);
    try {
      ModulationRecord mod = extract_modulation(state, prev_xi);
      prev_xi = mod.xi;
      SelfSimilarFrame frame = to_frame(state, mod, art.topo, fopts);
      art.mods.push_back(mod);
      art.frames.push_back(std::move(frame));
    } catch (const ExtractionError&) {
      // nothing steepening cleanly at this snapshot; series stay parallel
    }
    return true;
  };

  SolveResult res = solve(std::move(init.state), art.topo, cfg.model, scfg, observer);
  art.final_record = res.final_record;
  art.stop = res.reason;
  art.steps = res.steps;
  art.final_state = std::move(res.state);

  stage = "extract";
  if (!art.frames.empty()) {
    try {
      const NuEstimate est = estimate_nu(art.frames);
      art.nu_estimate = est;
      art.nu = est.nu;
      art.nu_source = "limit";
    } catch (const InsufficientDataError&) {
      art.nu = frame_third_derivative(art.frames.back());
      art.nu_source = "last_frame";
    }
  } else {
    art.nu = 0.0;
    art.nu_source = "none";
  }
  art.lambda_hat = art.nu > 0.0 ? std::sqrt(art.nu / 6.0) : 1.0;
  art.floor = resolvable_floor(art.grid.dx(), art.lambda_hat);

  stage = "diagnostics";
  DiagNotes notes;
  try {
    art.blowup = estimate_blowup(art.mods, art.floor);
  } catch (const Error& e) {
    notes.blowup = e.what();
  }
  if (art.blowup) {
    try {
      art.rate = rate_check(art.marks, art.blowup->t_star, art.floor);
    } catch (const Error& e) {
      notes.rate = e.what();
    }
    try {
      // centered where the final snapshot actually steepens: the transient
      // vertex tends to the blowup point but lags it by ~ speed * gap
      art.cusp = cusp_fit(*art.final_state, art.final_record.argmin_x);
    } catch (const Error& e) {
      notes.cusp = e.what();
    }
  } else {
    notes.rate = "needs a blowup estimate";
    notes.cusp = "needs a blowup estimate";
  }
  if (!art.frames.empty() && art.nu > 0.0) {
    try {
      art.convergence = convergence_check(art.frames, art.nu, cfg.conv_threshold, 1e3);
    } catch (const Error& e) {
      notes.convergence = e.what();
    }
  } else {
    notes.convergence = "no frames with a usable profile scale";
  }
  if (cfg.seed_kind == "constructed" && !art.frames.empty()) {
    try {
      for (std::size_t i = 0; i < art.frames.size(); ++i)
        art.bootstrap.push_back(bootstrap_check(art.frames[i], art.mods, i, cfg.seed));
    } catch (const Error& e) {
      art.bootstrap.clear();
      notes.bootstrap = e.what();
    }
    const double ell = cfg.seed.ell();
    for (double mult : {0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0}) {
      for (double sign : {1.0, -1.0}) {
        const double y0 = sign * mult * ell;
        try {
          TrajectoryPath path =
              trace_trajectory(art.frames, art.mods, y0, VelocityFamily::W, cfg.seed);
          art.trajectory_y0.push_back(y0);
          art.trajectories.push_back(std::move(path));
        } catch (const Error& e) {
          if (notes.trajectories.empty()) notes.trajectories = e.what();
        }
      }
    }
  }
  art.diagnostics_notes = join_notes(notes);

  stage = "verdict";
  art.verdict = build_verdict(art, notes);
  return art;
}

void emit_run_artifacts(const RunArtifacts& art, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "config.txt", dump_config(art.config));

  if (art.seed_report) {
    ordered_json j;
    j["pass"] = art.seed_report->pass;
    auto arr = ordered_json::array();
    for (const SeedCheck& c : art.seed_report->checks)
      arr.push_back({{"id", c.id},
                     {"region", c.region},
                     {"threshold", c.threshold},
                     {"worst_value", c.worst_value},
                     {"worst_y", c.worst_y},
                     {"margin", c.margin},
                     {"pass", c.pass}});
    j["checks"] = arr;
    write_json(dir / "seed_report.json", j);
  }

  {
    CsvTable t;
    t.header = {"step", "t", "dt", "min_slope", "argmin_x", "max_speed", "mass", "min_gap",
                "max_abs_w", "max_abs_z"};
    for (std::size_t i = 0; i < art.marks.size(); ++i) {
      const StepRecord& r = art.marks[i];
      t.rows.push_back({static_cast<double>(r.step), r.t, r.dt, r.min_slope, r.argmin_x,
                        r.max_speed, r.mass, r.min_gap, art.max_abs_w[i], art.max_abs_z[i]});
    }
    write_csv(dir / "marks.csv", t);
  }

  if (!art.mods.empty()) {
    CsvTable t;
    t.header = {"t", "kappa", "tau", "xi", "s", "vertex_slope", "domain_length"};
    for (const ModulationRecord& m : art.mods)
      t.rows.push_back({m.t, m.kappa, m.tau, m.xi, m.s, m.vertex_slope, m.domain_length});
    write_csv(dir / "modulation.csv", t);
  }

  if (!art.frames.empty()) {
    fs::create_directories(dir / "frames");
    CsvTable idx;
    idx.header = {"idx",        "s",          "t_source",         "kappa", "tau",
                  "xi",         "origin_slope", "patch_step",     "patch_half_count",
                  "y_min",      "nodes_per_decade", "truncated"};
    for (std::size_t i = 0; i < art.frames.size(); ++i) {
      const SelfSimilarFrame& f = art.frames[i];
      CsvTable t;
      t.header = {"region", "y", "W", "Z", "B"};
      for (std::size_t k = 0; k < f.y.size(); ++k)
        t.rows.push_back({0.0, f.y[k], f.W[k], f.Z[k], f.B[k]});
      for (std::size_t k = 0; k < f.py.size(); ++k)
        t.rows.push_back({1.0, f.py[k], f.pW[k], f.pZ[k], 0.0});
      write_csv(dir / "frames" / frame_file_name(i), t);
      idx.rows.push_back({static_cast<double>(i), f.s, f.t_source, f.kappa, f.tau, f.xi,
                          f.origin_slope, f.patch_step, static_cast<double>(f.patch_half_count),
                          f.y_min, static_cast<double>(f.nodes_per_decade),
                          f.truncated ? 1.0 : 0.0});
    }
    write_csv(dir / "frames_index.csv", idx);
  }

  if (art.rate) {
    CsvTable t;
    t.header = {"t", "product"};
    for (std::size_t i = 0; i < art.rate->t.size(); ++i)
      t.rows.push_back({art.rate->t[i], art.rate->product[i]});
    write_csv(dir / "rate_product.csv", t);
  }

  if (art.convergence) {
    CsvTable t;
    t.header = {"s", "sup"};
    for (std::size_t i = 0; i < art.convergence->s.size(); ++i)
      t.rows.push_back({art.convergence->s[i], art.convergence->sup[i]});
    write_csv(dir / "convergence.csv", t);
  }

  if (art.cusp && !art.cusp->log_r.empty()) {
    CsvTable t;
    t.header = {"log_r", "log_dw"};
    for (std::size_t i = 0; i < art.cusp->log_r.size(); ++i)
      t.rows.push_back({art.cusp->log_r[i], art.cusp->log_dw[i]});
    write_csv(dir / "cusp_pairs.csv", t);
  }

  if (!art.frames.empty() && art.nu > 0.0) {
    const SelfSimilarFrame& f = art.frames.back();
    CsvTable t;
    t.header = {"y", "W", "Wref"};
    for (std::size_t i = 0; i < f.y.size(); ++i)
      t.rows.push_back({f.y[i], f.W[i], eval_profile_rescaled(f.y[i], art.nu)});
    write_csv(dir / "overlay.csv", t);
  }

  if (!art.bootstrap.empty()) {
    CsvTable t;
    t.header = {"s"};
    for (const InequalityRecord& rec : art.bootstrap.front().records) t.header.push_back(rec.id);
    t.header.push_back("noise_floor_d4");
    for (const BootstrapReport& rep : art.bootstrap) {
      std::vector<double> row{rep.s};
      for (const InequalityRecord& rec : rep.records)
        row.push_back(rec.region_empty ? kNaN : rec.margin);
      row.push_back(rep.noise_floor_d4);
      t.rows.push_back(std::move(row));
    }
    write_csv(dir / "bootstrap.csv", t);
  }

  if (!art.trajectories.empty()) {
    CsvTable t;
    t.header = {"y0", "family", "s", "phi"};
    for (std::size_t i = 0; i < art.trajectories.size(); ++i) {
      const TrajectoryPath& p = art.trajectories[i];
      for (std::size_t k = 0; k < p.s.size(); ++k)
        t.rows.push_back({art.trajectory_y0[i], 0.0, p.s[k], p.phi[k]});
    }
    write_csv(dir / "trajectories.csv", t);
  }

  write_json(dir / "report.json", report_json(art));

  {
    ordered_json j;
    j["all_pass"] = art.verdict.all_pass;
    j["summary"] = art.verdict.summary();
    auto arr = ordered_json::array();
    for (const VerdictItem& it : art.verdict.items)
      arr.push_back({{"id", it.id},
                     {"status", it.status},
                     {"note", it.note},
                     {"evidence", evidence_json(it.evidence)}});
    j["items"] = arr;
    write_json(dir / "verdict.json", j);
  }
}

fs::path resolve_out_dir(const std::string& dir) {
  fs::path p = dir;
  if (p.is_relative()) {
    const char* root = std::getenv("SWBREAK_OUT_ROOT");
    if (root && *root) p = fs::path(root) / p;
  }
  return p;
}

void prepare_run_dir(const fs::path& dir) {
  std::error_code ec;
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir))
      throw IoError("output path exists and is not a directory: " + dir.string());
    if (!fs::is_empty(dir) && !fs::exists(dir / "manifest.json"))
      throw IoError("refusing to clear '" + dir.string() +
                    "': nonempty and not a previous run directory (no manifest.json)");
    fs::remove_all(dir, ec);
    if (ec) throw IoError("cannot clear '" + dir.string() + "': " + ec.message());
  }
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

namespace {

// Shared by run_single and the sweep cells: everything lands in `dir`;
// failures leave a manifest recording the stage and message.
RunManifest run_into_dir(const RunConfig& cfg, const fs::path& dir, RunArtifacts* art_out) {
  std::string stage = "config";
  RunManifest man;
  man.code_version = version_string;
  try {
    cfg.validate();
    man.config_hash = config_hash(cfg);
    prepare_run_dir(dir);
    write_text(dir / "config.txt", dump_config(cfg));
    RunArtifacts art = execute_run(cfg, &stage);
    stage = "emit";
    emit_run_artifacts(art, dir);
    man.grid_summary = describe_grid(art.grid);
    man.stop_reason = stop_reason_name(art.stop);
    man.verdict_summary = art.verdict.summary();
    man.all_pass = art.verdict.all_pass;
    if (art_out) *art_out = std::move(art);
    return write_manifest(dir, man);
  } catch (const Error& e) {
    man.error_stage = stage;
    man.error_message = e.what();
    man.all_pass = false;
    try {
      if (fs::is_directory(dir)) write_manifest(dir, man);
    } catch (...) {
      // the original error is the one worth reporting
    }
    throw Error("[" + stage + "] " + e.what());
  }
}

}  // namespace

RunManifest run_single(const RunConfig& cfg) {
  return run_into_dir(cfg, resolve_out_dir(cfg.out_dir), nullptr);
}

SweepResult run_sweep(const RunConfig& cfg) {
  cfg.validate(/*sweep_mode=*/true);
  SweepResult result;
  const fs::path dir = resolve_out_dir(cfg.out_dir);
  result.dir = dir;
  prepare_run_dir(dir);
  write_text(dir / "config.txt", dump_config(cfg));

  const std::vector<double> eps_axis =
      cfg.sweep_eps.empty() ? std::vector<double>{cfg.model.eps} : cfg.sweep_eps;
  const std::vector<double> beta_axis =
      cfg.sweep_beta.empty() ? std::vector<double>{cfg.model.beta_star} : cfg.sweep_beta;

  struct Cell {
    double eps, beta;
    std::size_t index;
  };
  std::vector<Cell> cells;
  for (double e : eps_axis)
    for (double b : beta_axis) cells.push_back({e, b, cells.size()});

  std::vector<SweepRow> rows(cells.size());
  const auto run_cell = [&](const Cell& cell) {
    SweepRow row;
    row.eps = cell.eps;
    row.beta_star = cell.beta;
    row.t_star = kNaN;
    row.x_star = kNaN;
    char sub[80];
    std::snprintf(sub, sizeof(sub), "runs/run_%03zu_eps%g_beta%g", cell.index, cell.eps,
                  cell.beta);
    row.dir = sub;
    RunConfig c = cfg;
    c.model.eps = cell.eps;
    c.model.beta_star = cell.beta;
    c.sweep_eps.clear();
    c.sweep_beta.clear();
    c.workers = 1;
    c.out_dir = sub;
    try {
      if (cfg.seed_kind != "constructed") {
        const InitialData init = build_initial(c, /*want_report=*/false);
        if (cannot_steepen(init.state, init.topo, c.model)) {
          row.ok = true;
          row.no_steepening = true;
          row.seminorm_h5 = std::hypot(sobolev_seminorm(init.state.w, 5, init.grid),
                                       sobolev_seminorm(init.state.z, 5, init.grid));
          return row;
        }
      }
      RunArtifacts art;
      run_into_dir(c, dir / sub, &art);
      row.ok = true;
      row.seminorm_h5 = art.seminorm_h5;
      row.verdict_pass = art.verdict.all_pass;
      if (art.blowup) {
        row.t_star = art.blowup->t_star;
        row.x_star = art.blowup->x_star;
      }
    } catch (const Error& e) {
      row.ok = false;
      row.error = e.what();
    }
    return row;
  };

  {
    const std::size_t nw =
        std::max<std::size_t>(1, std::min<std::size_t>(cfg.workers, cells.size()));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (std::size_t t = 0; t < nw; ++t)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cells.size()) return;
          rows[i] = run_cell(cells[i]);
        }
      });
    for (std::thread& th : pool) th.join();
  }
  result.rows = rows;

  {
    CsvTable t;
    t.header = {"eps", "beta_star", "t_star", "x_star", "seminorm_h5", "ok", "no_steepening",
                "verdict_pass"};
    for (const SweepRow& r : rows)
      t.rows.push_back({r.eps, r.beta_star, r.t_star, r.x_star, r.seminorm_h5, r.ok ? 1.0 : 0.0,
                        r.no_steepening ? 1.0 : 0.0, r.verdict_pass ? 1.0 : 0.0});
    write_csv(dir / "sweep.csv", t);
  }

  std::vector<SweepPoint> pts;
  for (const SweepRow& r : rows)
    if (r.ok && !r.no_steepening && std::isfinite(r.t_star) && r.t_star > 0.0 &&
        std::max(r.eps, r.beta_star) > 0.0)
      pts.push_back({r.eps, r.beta_star, r.t_star});
  try {
    result.lifespan = lifespan_regression(pts);
  } catch (const Error& e) {
    result.lifespan_note = e.what();
  }

  if (cfg.seed_kind == "rest") {
    try {
      const Grid g = cfg.make_grid();
      const Topography topo = cfg.make_topography(g.length);
      std::vector<double> zeta0(g.n), vbar0(g.n);
      const double kz = 2.0 * kPi * cfg.shape_zeta_mode / g.length;
      const double kv = 2.0 * kPi * cfg.shape_vbar_mode / g.length;
      for (std::size_t i = 0; i < g.n; ++i) {
        zeta0[i] = cfg.shape_zeta_amp * std::sin(kz * g.x(i));
        vbar0[i] = cfg.shape_vbar_amp * std::sin(kv * g.x(i));
      }
      std::vector<std::pair<double, double>> pairs;
      for (const Cell& cell : cells)
        if (std::max(cell.eps, cell.beta) > 0.0) pairs.emplace_back(cell.eps, cell.beta);
      if (pairs.empty())
        result.scaling_note = "no cell with max(eps, beta*) > 0";
      else
        result.scaling = moser_scaling_check(zeta0, vbar0, topo, g, pairs, cfg.model);
    } catch (const Error& e) {
      result.scaling_note = e.what();
    }
  } else {
    result.scaling_note = "rest seeds only";
  }

  bool cells_ok = true;
  std::size_t ok_count = 0, flagged = 0;
  for (const SweepRow& r : rows) {
    if (!r.ok) cells_ok = false;
    if (r.ok) ++ok_count;
    if (r.no_steepening) ++flagged;
  }
  result.all_pass = cells_ok && (!result.lifespan || result.lifespan->in_band) &&
                    (!result.scaling || result.scaling->pass);

  {
    ordered_json j;
    j["cells"] = cells.size();
    j["eps_axis"] = eps_axis;
    j["beta_axis"] = beta_axis;
    auto arr = ordered_json::array();
    for (const SweepRow& r : rows) {
      ordered_json jr;
      jr["eps"] = r.eps;
      jr["beta_star"] = r.beta_star;
      jr["dir"] = r.dir;
      jr["ok"] = r.ok;
      jr["no_steepening"] = r.no_steepening;
      if (!r.error.empty()) jr["error"] = r.error;
      if (std::isfinite(r.t_star)) jr["t_star"] = r.t_star;
      if (std::isfinite(r.x_star)) jr["x_star"] = r.x_star;
      jr["seminorm_h5"] = r.seminorm_h5;
      jr["verdict_pass"] = r.verdict_pass;
      arr.push_back(std::move(jr));
    }
    j["rows"] = arr;
    if (result.lifespan)
      j["lifespan"] = {{"slope", result.lifespan->slope},
                       {"intercept", result.lifespan->intercept},
                       {"in_band", result.lifespan->in_band},
                       {"max_ratio", result.lifespan->max_ratio},
                       {"samples", result.lifespan->samples}};
    else
      j["lifespan_note"] = result.lifespan_note;
    if (result.scaling) {
      ordered_json js;
      auto jrows = ordered_json::array();
      for (const ScalingRow& r : result.scaling->rows)
        jrows.push_back({{"eps", r.eps},
                         {"beta_star", r.beta_star},
                         {"seminorm", r.seminorm},
                         {"ratio", r.ratio}});
      js["rows"] = jrows;
      js["ratio_spread"] = result.scaling->ratio_spread;
      js["pass"] = result.scaling->pass;
      j["scaling"] = js;
    } else {
      j["scaling_note"] = result.scaling_note;
    }
    j["all_pass"] = result.all_pass;
    write_json(dir / "sweep_report.json", j);
  }

  {
    RunManifest man;
    man.config_hash = config_hash(cfg);
    man.code_version = version_string;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "cells:%zu ok:%zu flagged:%zu", cells.size(), ok_count,
                  flagged);
    std::string summary = buf;
    if (result.lifespan)
      summary += std::string(" lifespan:") + (result.lifespan->in_band ? "pass" : "fail");
    if (result.scaling)
      summary += std::string(" scaling:") + (result.scaling->pass ? "pass" : "fail");
    man.verdict_summary = summary;
    man.all_pass = result.all_pass;
    write_manifest(dir, man);
  }
  return result;
}

namespace {

std::vector<StepRecord> read_marks(const CsvTable& t) {
  const std::size_t cs = t.col("step"), ct = t.col("t"), cdt = t.col("dt"),
                    cm = t.col("min_slope"), ca = t.col("argmin_x"), cv = t.col("max_speed"),
                    cmass = t.col("mass"), cg = t.col("min_gap");
  std::vector<StepRecord> recs;
  recs.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    StepRecord r;
    r.step = static_cast<std::size_t>(row[cs]);
    r.t = row[ct];
    r.dt = row[cdt];
    r.min_slope = row[cm];
    r.argmin_x = row[ca];
    r.max_speed = row[cv];
    r.mass = row[cmass];
    r.min_gap = row[cg];
    recs.push_back(r);
  }
  return recs;
}

std::vector<ModulationRecord> read_mods(const CsvTable& t) {
  const std::size_t ct = t.col("t"), ck = t.col("kappa"), ctau = t.col("tau"), cxi = t.col("xi"),
                    cs = t.col("s"), cv = t.col("vertex_slope"), cd = t.col("domain_length");
  std::vector<ModulationRecord> mods;
  mods.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    ModulationRecord m;
    m.t = row[ct];
    m.kappa = row[ck];
    m.tau = row[ctau];
    m.xi = row[cxi];
    m.s = row[cs];
    m.vertex_slope = row[cv];
    m.domain_length = row[cd];
    mods.push_back(m);
  }
  return mods;
}

std::vector<SelfSimilarFrame> read_frames(const fs::path& dir) {
  const CsvTable idx = read_csv(dir / "frames_index.csv");
  const std::size_t ci = idx.col("idx"), cs = idx.col("s"), ct = idx.col("t_source"),
                    ck = idx.col("kappa"), ctau = idx.col("tau"), cxi = idx.col("xi"),
                    co = idx.col("origin_slope"), cps = idx.col("patch_step"),
                    cph = idx.col("patch_half_count"), cy = idx.col("y_min"),
                    cn = idx.col("nodes_per_decade"), ctr = idx.col("truncated");
  std::vector<SelfSimilarFrame> frames;
  frames.reserve(idx.rows.size());
  for (const auto& row : idx.rows) {
    SelfSimilarFrame f;
    f.s = row[cs];
    f.t_source = row[ct];
    f.kappa = row[ck];
    f.tau = row[ctau];
    f.xi = row[cxi];
    f.origin_slope = row[co];
    f.patch_step = row[cps];
    f.patch_half_count = static_cast<std::size_t>(row[cph]);
    f.y_min = row[cy];
    f.nodes_per_decade = static_cast<int>(row[cn]);
    f.truncated = row[ctr] != 0.0;
    const CsvTable t =
        read_csv(dir / "frames" / frame_file_name(static_cast<std::size_t>(row[ci])));
    const std::size_t cr = t.col("region"), cyy = t.col("y"), cw = t.col("W"), cz = t.col("Z"),
                      cb = t.col("B");
    for (const auto& r : t.rows) {
      if (r[cr] == 0.0) {
        f.y.push_back(r[cyy]);
        f.W.push_back(r[cw]);
        f.Z.push_back(r[cz]);
        f.B.push_back(r[cb]);
      } else {
        f.py.push_back(r[cyy]);
        f.pW.push_back(r[cw]);
        f.pZ.push_back(r[cz]);
      }
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace

PlotData emit_plotdata(const fs::path& run_dir) {
  RunManifest man = read_manifest(run_dir);  // IoError when not a run directory
  PlotData out;

  std::optional<ordered_json> report;
  if (fs::exists(run_dir / "report.json")) {
    try {
      report = ordered_json::parse(read_text(run_dir / "report.json"));
    } catch (const std::exception&) {
      report.reset();
    }
  }
  std::optional<RunConfig> cfg;
  if (fs::exists(run_dir / "config.txt")) {
    try {
      RunConfig c;
      apply_config_text(c, read_text(run_dir / "config.txt"));
      cfg = std::move(c);
    } catch (const Error&) {
      cfg.reset();
    }
  }
  std::vector<SelfSimilarFrame> frames;
  if (fs::exists(run_dir / "frames_index.csv")) {
    try {
      frames = read_frames(run_dir);
    } catch (const Error&) {
      frames.clear();
    }
  }
  std::vector<ModulationRecord> mods;
  if (fs::exists(run_dir / "modulation.csv")) {
    try {
      mods = read_mods(read_csv(run_dir / "modulation.csv"));
    } catch (const Error&) {
      mods.clear();
    }
  }

  const auto emit = [&](const char* name, bool inputs_ok, const std::function<void()>& build) {
    if (!inputs_ok) {
      out.absent.push_back(name);
      return;
    }
    try {
      build();
      out.emitted.push_back(name);
    } catch (const Error&) {
      out.absent.push_back(name);
    }
  };

  const bool have_blowup = report && report->contains("blowup") && report->contains("floor");
  emit("rate_product.csv", have_blowup && fs::exists(run_dir / "marks.csv"), [&] {
    const std::vector<StepRecord> recs = read_marks(read_csv(run_dir / "marks.csv"));
    const RateCheck rc = rate_check(recs, (*report)["blowup"]["t_star"].get<double>(),
                                    (*report)["floor"].get<double>());
    CsvTable t;
    t.header = {"t", "product"};
    for (std::size_t i = 0; i < rc.t.size(); ++i) t.rows.push_back({rc.t[i], rc.product[i]});
    write_csv(run_dir / "rate_product.csv", t);
  });

  const double nu =
      report && report->contains("nu") ? (*report)["nu"].get<double>() : 0.0;
  emit("convergence.csv", !frames.empty() && nu > 0.0 && cfg.has_value(), [&] {
    const ConvergenceSeries cs = convergence_check(frames, nu, cfg->conv_threshold, 1e3);
    CsvTable t;
    t.header = {"s", "sup"};
    for (std::size_t i = 0; i < cs.s.size(); ++i) t.rows.push_back({cs.s[i], cs.sup[i]});
    write_csv(run_dir / "convergence.csv", t);
  });

  emit("overlay.csv", !frames.empty() && nu > 0.0, [&] {
    const SelfSimilarFrame& f = frames.back();
    CsvTable t;
    t.header = {"y", "W", "Wref"};
    for (std::size_t i = 0; i < f.y.size(); ++i)
      t.rows.push_back({f.y[i], f.W[i], eval_profile_rescaled(f.y[i], nu)});
    write_csv(run_dir / "overlay.csv", t);
  });

  emit("bootstrap.csv",
       cfg.has_value() && cfg->seed_kind == "constructed" && !frames.empty() &&
           mods.size() == frames.size(),
       [&] {
         std::vector<BootstrapReport> reports;
         for (std::size_t i = 0; i < frames.size(); ++i)
           reports.push_back(bootstrap_check(frames[i], mods, i, cfg->seed));
         CsvTable t;
         t.header = {"s"};
         for (const InequalityRecord& rec : reports.front().records) t.header.push_back(rec.id);
         t.header.push_back("noise_floor_d4");
         for (const BootstrapReport& rep : reports) {
           std::vector<double> row{rep.s};
           for (const InequalityRecord& rec : rep.records)
             row.push_back(rec.region_empty ? kNaN : rec.margin);
           row.push_back(rep.noise_floor_d4);
           t.rows.push_back(std::move(row));
         }
         write_csv(run_dir / "bootstrap.csv", t);
       });

  // the cusp pairs need field data that is not stored; keep an existing table
  if (fs::exists(run_dir / "cusp_pairs.csv"))
    out.emitted.push_back("cusp_pairs.csv");
  else
    out.absent.push_back("cusp_pairs.csv");

  write_manifest(run_dir, man);
  return out;
}

}  // namespace swbreak
