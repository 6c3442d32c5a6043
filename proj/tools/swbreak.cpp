// Command-line front end: single runs, parameter sweeps, data verification,
// profile self-checks, and plot-table regeneration.
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "swbreak/config.hpp"
#include "swbreak/errors.hpp"
#include "swbreak/initial_data.hpp"
#include "swbreak/io.hpp"
#include "swbreak/pipeline.hpp"
#include "swbreak/profile.hpp"
#include "swbreak/version.hpp"

namespace {

using namespace swbreak;

struct ConfigCli {
  std::string preset, config_file;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> sugar;
  bool print_config = false;
};

std::string trim_ws(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

// Precedence: preset, then config file, then --set in order, then sugar flags.
void add_config_options(CLI::App* cmd, ConfigCli& o) {
  cmd->add_option("--preset", o.preset,
                  "starting point: burgers-oracle, paper-seed, paper-seed-small, topo-sine");
  cmd->add_option("--config", o.config_file, "key = value file applied over the preset");
  cmd->add_option("--set", o.sets, "KEY=VALUE override, repeatable, applied in order");
  const auto sugar = [cmd, &o](const std::string& flag, const std::string& key,
                               const std::string& desc) {
    cmd->add_option_function<std::string>(
        flag, [&o, key](const std::string& v) { o.sugar.emplace_back(key, v); }, desc);
  };
  sugar("--M", "seed.M", "largeness parameter (seed.M)");
  sugar("--delta", "seed.delta", "smallness parameter (seed.delta)");
  sugar("--n", "grid.n", "grid nodes (grid.n)");
  sugar("--out", "output.dir", "output directory (output.dir)");
  sugar("--eps", "model.eps", "amplitude parameter (model.eps)");
  sugar("--beta", "model.beta_star", "topography parameter (model.beta_star)");
  sugar("--workers", "sweep.workers", "sweep worker threads (sweep.workers)");
  sugar("--sweep-eps", "sweep.eps", "comma list of eps values (sweep.eps)");
  sugar("--sweep-beta", "sweep.beta", "comma list of beta* values (sweep.beta)");
  cmd->add_flag("--print-config", o.print_config, "print the effective config and exit");
}

RunConfig build_config(const ConfigCli& o) {
  RunConfig cfg = o.preset.empty() ? RunConfig{} : preset_config(o.preset);
  if (!o.config_file.empty()) apply_config_text(cfg, read_text(o.config_file));
  for (const std::string& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    apply_key(cfg, trim_ws(kv.substr(0, eq)), trim_ws(kv.substr(eq + 1)));
  }
  for (const auto& [key, value] : o.sugar) apply_key(cfg, key, value);
  return cfg;
}

int do_simulate(const ConfigCli& o) {
  const RunConfig cfg = build_config(o);
  if (o.print_config) {
    std::fputs(dump_config(cfg).c_str(), stdout);
    cfg.validate();
    return 0;
  }
  const RunManifest man = run_single(cfg);
  std::printf("run: %s\n", resolve_out_dir(cfg.out_dir).string().c_str());
  std::printf("grid: %s\n", man.grid_summary.c_str());
  std::printf("stop: %s\n", man.stop_reason.c_str());
  std::printf("verdict: %s\n", man.verdict_summary.c_str());
  return man.all_pass ? 0 : 1;
}

int do_sweep(const ConfigCli& o) {
  const RunConfig cfg = build_config(o);
  if (o.print_config) {
    std::fputs(dump_config(cfg).c_str(), stdout);
    cfg.validate(/*sweep_mode=*/true);
    return 0;
  }
  const SweepResult res = run_sweep(cfg);
  for (const SweepRow& r : res.rows) {
    if (!r.ok)
      std::printf("eps=%-10g beta=%-10g FAILED %s\n", r.eps, r.beta_star, r.error.c_str());
    else if (r.no_steepening)
      std::printf("eps=%-10g beta=%-10g flagged: no steepening\n", r.eps, r.beta_star);
    else
      std::printf("eps=%-10g beta=%-10g t*=%-12.6g x*=%-12.6g |data|_H5=%.6g\n", r.eps,
                  r.beta_star, r.t_star, r.x_star, r.seminorm_h5);
  }
  if (res.lifespan)
    std::printf("lifespan: slope=%.4f (band [-1.1, -0.9]) in_band=%s samples=%zu\n",
                res.lifespan->slope, res.lifespan->in_band ? "yes" : "no",
                res.lifespan->samples);
  else
    std::printf("lifespan: not evaluated (%s)\n", res.lifespan_note.c_str());
  if (res.scaling)
    std::printf("scaling: ratio_spread=%.4f pass=%s\n", res.scaling->ratio_spread,
                res.scaling->pass ? "yes" : "no");
  else if (!res.scaling_note.empty())
    std::printf("scaling: not evaluated (%s)\n", res.scaling_note.c_str());
  std::printf("sweep: %s all_pass=%s\n", res.dir.string().c_str(),
              res.all_pass ? "true" : "false");
  return res.all_pass ? 0 : 1;
}

int do_verify_seed(const ConfigCli& o) {
  const RunConfig cfg = build_config(o);
  if (o.print_config) {
    std::fputs(dump_config(cfg).c_str(), stdout);
    cfg.validate();
    return 0;
  }
  if (cfg.seed_kind != "constructed")
    throw ConfigError("verify-seed needs seed.kind = constructed");
  try {
    cfg.seed.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  const SelfSimilarSeed seed(cfg.seed, cfg.make_seed_options());
  const SeedReport rep = verify_seed(seed);
  for (const SeedCheck& c : rep.checks)
    std::printf("%-24s %-8s margin=% -12.4e worst=% -12.6g at y=% -12.6g %s\n", c.id.c_str(),
                c.region.c_str(), c.margin, c.worst_value, c.worst_y,
                c.pass ? "pass" : "FAIL");
  std::printf("seed: %s (far_scale=%g support_x=%g ell=%g)\n", rep.pass ? "pass" : "FAIL",
              seed.far_scale(), seed.support_x(), cfg.seed.ell());
  return rep.pass ? 0 : 1;
}

int do_profile_check(double y_abs_max, std::size_t points_per_decade) {
  const BoundReport rep = check_profile_bounds(y_abs_max, points_per_decade);
  for (const BoundCheck& c : rep.checks)
    std::printf("%-32s violations=%-6zu worst_margin=% -12.4e at y=% -12.6g %s\n",
                c.name.c_str(), c.violations, c.worst_margin, c.worst_y,
                c.pass ? "pass" : "FAIL");
  std::printf("cubic residual: max=%.3e scaled=%.3e; ode residual: max=%.3e\n",
              rep.max_cubic_residual, rep.max_cubic_residual_scaled, rep.max_ode_residual);
  std::printf("fitted decay constants (orders 3..5): %.6g %.6g %.6g\n", rep.fitted_c345[0],
              rep.fitted_c345[1], rep.fitted_c345[2]);
  std::printf("profile: %s over |y| <= %g (%zu samples)\n", rep.pass ? "pass" : "FAIL",
              rep.y_abs_max, rep.samples);
  return rep.pass ? 0 : 1;
}

int do_plotdata(const std::string& dir) {
  const PlotData pd = emit_plotdata(resolve_out_dir(dir));
  for (const std::string& name : pd.emitted) std::printf("emitted: %s\n", name.c_str());
  for (const std::string& name : pd.absent) std::printf("absent: %s\n", name.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wave-breaking laboratory for the one-dimensional shallow water system"};
  app.set_version_flag("--version", std::string("swbreak ") + version_string);
  app.require_subcommand(1);

  ConfigCli sim_opts;
  CLI::App* sim = app.add_subcommand("simulate", "run one configuration end to end");
  add_config_options(sim, sim_opts);

  ConfigCli sweep_opts;
  CLI::App* sweep = app.add_subcommand("sweep", "run a (eps, beta*) parameter sweep");
  add_config_options(sweep, sweep_opts);

  ConfigCli seed_opts;
  CLI::App* vseed = app.add_subcommand("verify-seed", "evaluate the seed admissibility checks");
  add_config_options(vseed, seed_opts);

  double y_abs_max = 1e4;
  std::size_t points_per_decade = 1024;
  CLI::App* prof = app.add_subcommand("profile-check", "verify the similarity profile bounds");
  prof->add_option("--ymax", y_abs_max, "half-width of the checked range");
  prof->add_option("--points-per-decade", points_per_decade, "sampling density");

  std::string plot_dir;
  CLI::App* plot = app.add_subcommand("plotdata", "regenerate plot tables of a finished run");
  plot->add_option("dir", plot_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return do_simulate(sim_opts);
    if (sweep->parsed()) return do_sweep(sweep_opts);
    if (vseed->parsed()) return do_verify_seed(seed_opts);
    if (prof->parsed()) return do_profile_check(y_abs_max, points_per_decade);
    if (plot->parsed()) return do_plotdata(plot_dir);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
