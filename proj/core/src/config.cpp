#include "swbreak/config.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "swbreak/errors.hpp"
#include "swbreak/io.hpp"

namespace swbreak {

namespace {

std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as a number");
  }
  if (used != value.size())
    throw ConfigError("config key '" + key + "': trailing junk in '" + value + "'");
  return v;
}

long long parse_integer(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as an integer");
  }
  if (used != value.size())
    throw ConfigError("config key '" + key + "': trailing junk in '" + value + "'");
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  if (value.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = value.find(',', start);
    const std::string cell =
        comma == std::string::npos ? value.substr(start) : value.substr(start, comma - start);
    out.push_back(parse_double(key, cell));
    if (comma == std::string::npos) return out;
    start = comma + 1;
  }
}

std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_g17(v[i]);
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// One config key: its dotted name plus typed accessors into RunConfig.
struct KeyDef {
  const char* name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

KeyDef str_key(const char* name, std::string RunConfig::* field) {
  return {name, [field](const RunConfig& c) { return c.*field; },
          [field](RunConfig& c, const std::string& v) { c.*field = v; }};
}

template <typename Obj>
KeyDef dbl_key(const char* name, Obj RunConfig::* obj, double Obj::* field) {
  return {name, [=](const RunConfig& c) { return format_g17(c.*obj.*field); },
          [=](RunConfig& c, const std::string& v) { c.*obj.*field = parse_double(name, v); }};
}

KeyDef dbl_key(const char* name, double RunConfig::* field) {
  return {name, [=](const RunConfig& c) { return format_g17(c.*field); },
          [=](RunConfig& c, const std::string& v) { c.*field = parse_double(name, v); }};
}

KeyDef int_key(const char* name, int RunConfig::* field) {
  return {name, [=](const RunConfig& c) { return std::to_string(c.*field); },
          [=](RunConfig& c, const std::string& v) {
            c.*field = static_cast<int>(parse_integer(name, v));
          }};
}

KeyDef size_key(const char* name, std::size_t RunConfig::* field) {
  return {name, [=](const RunConfig& c) { return std::to_string(c.*field); },
          [=](RunConfig& c, const std::string& v) {
            const long long x = parse_integer(name, v);
            if (x < 0) throw ConfigError(std::string("config key '") + name + "': must be >= 0");
            c.*field = static_cast<std::size_t>(x);
          }};
}

KeyDef list_key(const char* name, std::vector<double> RunConfig::* field) {
  return {name, [=](const RunConfig& c) { return format_list(c.*field); },
          [=](RunConfig& c, const std::string& v) { c.*field = parse_list(name, v); }};
}

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      str_key("preset", &RunConfig::preset),
      str_key("seed.kind", &RunConfig::seed_kind),
      dbl_key("seed.M", &RunConfig::seed, &SeedParams::M),
      dbl_key("seed.delta", &RunConfig::seed, &SeedParams::delta),
      dbl_key("seed.kappa0", &RunConfig::seed, &SeedParams::kappa0),
      dbl_key("seed.far_scale", &RunConfig::seed_far_scale),
      dbl_key("seed.bump_amp", &RunConfig::seed_bump_amp),
      dbl_key("seed.z_amp", &RunConfig::seed_z_amp),
      dbl_key("seed.perturb_scale", &RunConfig::perturb_scale),
      {"seed.perturb_seed",
       [](const RunConfig& c) { return std::to_string(c.perturb_seed); },
       [](RunConfig& c, const std::string& v) {
         const long long x = parse_integer("seed.perturb_seed", v);
         if (x < 0) throw ConfigError("config key 'seed.perturb_seed': must be >= 0");
         c.perturb_seed = static_cast<unsigned long>(x);
       }},
      dbl_key("seed.sine_amp", &RunConfig::sine_amp),
      int_key("seed.sine_mode", &RunConfig::sine_mode),
      str_key("seed.w_file", &RunConfig::w_file),
      str_key("seed.z_file", &RunConfig::z_file),
      dbl_key("shape.zeta_amp", &RunConfig::shape_zeta_amp),
      int_key("shape.zeta_mode", &RunConfig::shape_zeta_mode),
      dbl_key("shape.vbar_amp", &RunConfig::shape_vbar_amp),
      int_key("shape.vbar_mode", &RunConfig::shape_vbar_mode),
      dbl_key("model.H", &RunConfig::model, &ModelParams::H),
      dbl_key("model.eps", &RunConfig::model, &ModelParams::eps),
      dbl_key("model.beta_star", &RunConfig::model, &ModelParams::beta_star),
      dbl_key("model.h_min", &RunConfig::model, &ModelParams::h_min),
      str_key("topo.family", &RunConfig::topo_family),
      dbl_key("topo.amplitude", &RunConfig::topo_amplitude),
      int_key("topo.mode", &RunConfig::topo_mode),
      dbl_key("topo.phase", &RunConfig::topo_phase),
      dbl_key("topo.center", &RunConfig::topo_center),
      dbl_key("topo.width", &RunConfig::topo_width),
      size_key("grid.n", &RunConfig::grid_n),
      dbl_key("grid.length", &RunConfig::grid_length),
      dbl_key("solver.cfl", &RunConfig::cfl),
      dbl_key("solver.t_end", &RunConfig::t_end),
      dbl_key("solver.stop_factor", &RunConfig::stop_factor),
      size_key("solver.max_steps", &RunConfig::max_steps),
      str_key("output.dir", &RunConfig::out_dir),
      int_key("output.cadence", &RunConfig::cadence),
      int_key("output.nodes_per_decade", &RunConfig::nodes_per_decade),
      dbl_key("output.patch_step", &RunConfig::patch_step),
      dbl_key("output.conv_threshold", &RunConfig::conv_threshold),
      list_key("sweep.eps", &RunConfig::sweep_eps),
      list_key("sweep.beta", &RunConfig::sweep_beta),
      int_key("sweep.workers", &RunConfig::workers),
  };
  return table;
}

}  // namespace

void RunConfig::validate(bool sweep_mode) const {
  const bool program_seed =
      seed_kind == "constructed" || seed_kind == "sine" || seed_kind == "rest";
  if (!program_seed && seed_kind != "files")
    throw ConfigError("seed.kind must be constructed, sine, rest, or files (got '" + seed_kind +
                      "')");
  if (seed_kind == "files") {
    if (w_file.empty() || z_file.empty())
      throw ConfigError("seed.kind = files requires both seed.w_file and seed.z_file");
  } else if (!w_file.empty() || !z_file.empty()) {
    throw ConfigError("seed.w_file/seed.z_file are only valid with seed.kind = files");
  }
  try {
    if (seed_kind == "constructed") seed.validate();
    model.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (seed_kind == "sine" && !(sine_amp > 0.0 && sine_amp < seed.kappa0))
    throw ConfigError("seed.sine_amp must lie in (0, kappa0) to keep the data away from vacuum");
  if (seed_kind == "rest" && model.eps == 0.0 && model.beta_star == 0.0 && !sweep_mode &&
      t_end == std::numeric_limits<double>::infinity())
    throw ConfigError("rest data with eps = beta* = 0 never steepens; set solver.t_end");
  if (topo_family != "flat" && topo_family != "sine" && topo_family != "gaussian")
    throw ConfigError("topo.family must be flat, sine, or gaussian (got '" + topo_family + "')");
  if (topo_family == "gaussian" && !(topo_width > 0.0))
    throw ConfigError("topo.width must be positive");
  if (grid_n < 8) throw ConfigError("grid.n must be at least 8");
  if (grid_length < 0.0) throw ConfigError("grid.length must be >= 0 (0 = derived)");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw ConfigError("solver.cfl must lie in (0, 1]");
  if (!(t_end > initial_time()))
    throw ConfigError("solver.t_end must exceed the initial time");
  if (stop_factor < 0.0) throw ConfigError("solver.stop_factor must be >= 0 (0 = auto)");
  if (max_steps == 0) throw ConfigError("solver.max_steps must be positive");
  if (out_dir.empty()) throw ConfigError("output.dir must not be empty");
  if (cadence < 1) throw ConfigError("output.cadence must be >= 1");
  if (nodes_per_decade < 4) throw ConfigError("output.nodes_per_decade must be >= 4");
  if (patch_step < 0.0) throw ConfigError("output.patch_step must be >= 0 (0 = auto)");
  if (!(conv_threshold > 0.0)) throw ConfigError("output.conv_threshold must be positive");
  if (perturb_scale < 0.0) throw ConfigError("seed.perturb_scale must be >= 0");
  if (workers < 1) throw ConfigError("sweep.workers must be >= 1");
  for (double e : sweep_eps)
    if (e < 0.0 || e > 1.0) throw ConfigError("sweep.eps values must lie in [0, 1]");
  for (double b : sweep_beta)
    if (b < 0.0 || b > 1.0) throw ConfigError("sweep.beta values must lie in [0, 1]");
  if (sweep_mode && sweep_eps.empty() && sweep_beta.empty())
    throw ConfigError("sweep mode needs a nonempty sweep.eps or sweep.beta axis");
}

Grid RunConfig::make_grid() const {
  double length = grid_length;
  if (length == 0.0) {
    if (seed_kind == "constructed") {
      const SelfSimilarSeed s(seed, make_seed_options());
      length = 2.1 * s.support_x();
    } else {
      length = 2.0 * 3.14159265358979323846;
    }
  }
  return Grid::centered(grid_n, length);
}

Topography RunConfig::make_topography(double length) const {
  if (topo_family == "sine")
    return Topography::sine(topo_amplitude, topo_mode, topo_phase, length);
  if (topo_family == "gaussian")
    return Topography::gaussian(topo_amplitude, topo_center, topo_width, length);
  return Topography::flat();
}

SeedOptions RunConfig::make_seed_options() const {
  SeedOptions opts;
  opts.far_scale = seed_far_scale;
  opts.bump_amp = seed_bump_amp;
  opts.z_amp = seed_z_amp;
  if (perturb_scale > 0.0) {
    // three odd bumps with reproducible random amplitudes and centers
    std::mt19937_64 rng(perturb_seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int k = 0; k < 3; ++k) {
      const double amp = perturb_scale * uni(rng);
      const double center = 10.0 * uni(rng);
      opts.extra_bumps.emplace_back(amp, center);
    }
  }
  return opts;
}

double RunConfig::effective_stop_factor(double dx) const {
  if (stop_factor > 0.0) return stop_factor;
  // stop where tau - t meets the similarity resolvability floor (20 dx)^{2/3}
  return std::min(0.05, std::cbrt(dx) / std::pow(20.0, 2.0 / 3.0));
}

double RunConfig::effective_patch_step() const {
  if (patch_step > 0.0) return patch_step;
  return seed_kind == "constructed" ? seed.ell() / 8.0 : 0.005;
}

double RunConfig::initial_time() const {
  return seed_kind == "constructed" ? -seed.delta : 0.0;
}

RunConfig preset_config(const std::string& name) {
  RunConfig cfg;
  cfg.preset = name;
  if (name == "burgers-oracle") {
    // pure transport oracle: profile-shaped w, no z, no topography; the
    // exact solution (and with it T*, x*, the rate and the cusp) is known
    cfg.seed_kind = "constructed";
    cfg.seed = SeedParams{100.0, 0.05, 3.0};
    cfg.seed_z_amp = 0.0;
    cfg.seed_bump_amp = 0.0;
    cfg.grid_n = 1u << 18;
    cfg.out_dir = "out/burgers-oracle";
  } else if (name == "paper-seed") {
    cfg.seed_kind = "constructed";
    cfg.seed = SeedParams{100.0, 0.05, 3.0};
    cfg.seed_bump_amp = 0.002;
    cfg.grid_n = 1u << 19;
    cfg.out_dir = "out/paper-seed";
  } else if (name == "paper-seed-small") {
    cfg.seed_kind = "constructed";
    cfg.seed = SeedParams{100.0, 0.01, 3.0};
    cfg.seed_bump_amp = 0.002;
    cfg.grid_n = 1u << 20;
    cfg.cadence = 64;
    cfg.out_dir = "out/paper-seed-small";
  } else if (name == "topo-sine") {
    cfg.seed_kind = "rest";
    cfg.shape_zeta_amp = 1.0;
    cfg.shape_zeta_mode = 1;
    cfg.shape_vbar_amp = 0.0;
    cfg.topo_family = "sine";
    cfg.topo_amplitude = 1.0;
    cfg.topo_mode = 1;
    cfg.model.eps = 0.0;
    cfg.model.beta_star = 0.1;
    cfg.grid_n = 2048;
    cfg.grid_length = 2.0 * 3.14159265358979323846;
    cfg.out_dir = "out/topo-sine";
  } else {
    throw ConfigError("unknown preset '" + name +
                      "' (available: burgers-oracle, paper-seed, paper-seed-small, topo-sine)");
  }
  return cfg;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const KeyDef& def : key_table()) {
    if (key == def.name) {
      def.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    apply_key(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

RunConfig load_config_file(const std::string& path) {
  RunConfig cfg;
  apply_config_text(cfg, read_text(path));
  return cfg;
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const KeyDef& def : key_table()) {
    out += def.name;
    out += " = ";
    out += def.get(cfg);
    out += '\n';
  }
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  return fnv1a_hex(dump_config(cfg));
}

}  // namespace swbreak
