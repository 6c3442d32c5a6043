#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "swbreak/grid.hpp"
#include "swbreak/initial_data.hpp"
#include "swbreak/topography.hpp"
#include "swbreak/transforms.hpp"

namespace swbreak {

// One run (or sweep) described by a flat key = value namespace.  Precedence:
// preset, then config file, then individual overrides — later wins.  Every
// key is listed by dump_config; feeding a dump back through
// apply_config_text reproduces the config exactly.
//
// Seed kinds:
//   constructed  similarity seed (M, delta, kappa0) posed at t0 = -delta
//   sine         w0 = kappa0 - amp sin(2 pi mode x / L), z0 = 0, t0 = 0
//   rest         surface/velocity shapes through the (eps, beta*) scaling,
//                t0 = 0: zeta0 = amp sin(...), vbar0 = amp sin(...)
//   files        explicit w/z fields from CSV (columns x,w and x,z)
struct RunConfig {
  std::string preset;  // provenance; set by preset_config

  // seed.*
  std::string seed_kind = "constructed";
  SeedParams seed{};
  double seed_far_scale = 0.0;  // 0 = smallest admissible
  double seed_bump_amp = 0.0;
  double seed_z_amp = -1.0;  // < 0 = min(M delta/4, 1/4); 0 = no z component
  double perturb_scale = 0.0;  // random extra bumps for robustness probes
  unsigned long perturb_seed = 1;
  double sine_amp = 0.1;
  int sine_mode = 1;
  std::string w_file, z_file;

  // shape.* (seed_kind = rest)
  double shape_zeta_amp = 1.0;
  int shape_zeta_mode = 1;
  double shape_vbar_amp = 0.0;
  int shape_vbar_mode = 1;

  // model.*
  ModelParams model{};

  // topo.*
  std::string topo_family = "flat";  // flat | sine | gaussian
  double topo_amplitude = 0.0;
  int topo_mode = 1;
  double topo_phase = 0.0;
  double topo_center = 0.0;
  double topo_width = 1.0;

  // grid.*
  std::size_t grid_n = 1u << 18;
  double grid_length = 0.0;  // 0 = derived (seed support, or 2 pi)

  // solver.*
  double cfl = 0.4;
  double t_end = std::numeric_limits<double>::infinity();
  double stop_factor = 0.0;  // 0 = resolvability rule min(0.05, dx^{1/3}/20^{2/3})
  std::size_t max_steps = 50'000'000;

  // output.*
  std::string out_dir = "out/run";
  int cadence = 24;            // snapshots per decade of tau - t
  int nodes_per_decade = 64;   // frame log grid
  double patch_step = 0.0;     // 0 = ell/8 for constructed seeds, 0.005 otherwise
  double conv_threshold = 0.1;

  // sweep.*
  std::vector<double> sweep_eps, sweep_beta;
  int workers = 1;

  void validate(bool sweep_mode = false) const;  // ConfigError

  Grid make_grid() const;            // derives the length when grid_length = 0
  Topography make_topography(double length) const;
  SeedOptions make_seed_options() const;  // includes any random perturbation bumps
  double effective_stop_factor(double dx) const;
  double effective_patch_step() const;
  double initial_time() const;  // -delta for constructed seeds, 0 otherwise
};

// Named starting points: burgers-oracle, paper-seed, paper-seed-small,
// topo-sine.  Throws ConfigError on an unknown name.
RunConfig preset_config(const std::string& name);

// Set one key (dotted name from the documented namespace).  Unknown keys and
// malformed values throw ConfigError.
void apply_key(RunConfig& cfg, const std::string& key, const std::string& value);

// key = value lines; '#' starts a comment; blank lines ignored.
void apply_config_text(RunConfig& cfg, const std::string& text);
RunConfig load_config_file(const std::string& path);  // applied over defaults

// Canonical dump: every key in stable order, %.17g numbers.
std::string dump_config(const RunConfig& cfg);

// FNV-1a of the canonical dump — the config identity recorded in manifests.
std::string config_hash(const RunConfig& cfg);

}  // namespace swbreak
