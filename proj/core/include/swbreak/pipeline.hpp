#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swbreak/config.hpp"
#include "swbreak/diagnostics.hpp"
#include "swbreak/io.hpp"
#include "swbreak/renormalization.hpp"
#include "swbreak/solver.hpp"

namespace swbreak {

// One run-level assertion.  status: "pass" | "fail" | "not_evaluated"
// (note says why an item could not be evaluated; an unevaluated item never
// fails the run).
struct VerdictItem {
  std::string id;
  std::string status;
  std::string note;
  std::vector<std::pair<std::string, double>> evidence;
};

// The five assertions checked on every run:
//   construction   blowup lands where the seed was aimed:
//                  |t*| <= 2 M delta^{4/3}, |x*| <= 2 M delta (constructed)
//   uniform-bound  sup over recorded snapshots of max(|w|, |z|) <= M
//   rate           (t* - t) * max|dw/dx| stays in [1/2, 2] and moves
//                  continuously over the resolvable window
//   cusp           Holder exponent at x* within 1/3 +- 0.05
//   convergence    sup|W - W_nu| on |y| <= 1e3 ends below the threshold and
//                  decreases over the final unit of s
struct Verdict {
  std::vector<VerdictItem> items;
  bool all_pass = false;         // no item has status "fail"
  std::string summary() const;   // "construction:pass rate:fail ..." one token per item
};

// Everything one run computes, before serialization.
struct RunArtifacts {
  RunConfig config;
  Grid grid;
  Topography topo;
  double t0 = 0.0;

  std::optional<SeedReport> seed_report;  // constructed seeds only
  double seminorm_h5 = 0.0;               // sqrt(|w0|_{H5}^2 + |z0|_{H5}^2), means removed

  // per-snapshot series; mods and frames are parallel (snapshots where the
  // modulation extraction failed appear in marks only)
  std::vector<StepRecord> marks;
  std::vector<double> max_abs_w, max_abs_z;  // parallel to marks
  std::vector<ModulationRecord> mods;
  std::vector<SelfSimilarFrame> frames;

  std::optional<RiemannState> final_state;  // last accepted step (cusp measurements)
  StepRecord final_record;
  StopReason stop = StopReason::time_cap;
  std::size_t steps = 0;

  double floor = 0.0;       // earliest resolved tau - t at lambda_hat
  double nu = 0.0;          // origin third derivative of the limit profile
  std::string nu_source;    // "limit" | "last_frame" | "none"
  std::optional<NuEstimate> nu_estimate;  // present when nu_source == "limit"
  double lambda_hat = 1.0;  // sqrt(nu/6) when nu > 0

  std::optional<BlowupEstimate> blowup;
  std::optional<RateCheck> rate;
  std::optional<CuspFit> cusp;
  std::optional<ConvergenceSeries> convergence;
  std::string diagnostics_notes;            // why any of the above are absent

  std::vector<BootstrapReport> bootstrap;   // per frame; constructed seeds only
  std::vector<double> trajectory_y0;        // traced starting points
  std::vector<TrajectoryPath> trajectories; // parallel to trajectory_y0

  Verdict verdict;
};

// Compute a full run in memory.  When `stage` is given it tracks progress
// ("config", "seed", "solve", "extract", "diagnostics", "verdict") so a
// caller catching an error knows where it was thrown.  Diagnostics that
// cannot be evaluated are recorded as absent, not thrown.
RunArtifacts execute_run(const RunConfig& cfg, std::string* stage = nullptr);

// Serialize every artifact (config.txt, series CSVs, frames, report.json,
// verdict.json) into dir.  Absent diagnostics simply emit no file.
void emit_run_artifacts(const RunArtifacts& art, const std::filesystem::path& dir);

// Prefix relative paths with the SWBREAK_OUT_ROOT environment variable
// (absolute paths and an unset variable pass through).
std::filesystem::path resolve_out_dir(const std::string& dir);

// Create dir fresh.  An existing nonempty dir is cleared only when it holds
// a manifest.json (i.e. it is a previous run); anything else is refused
// (IoError) rather than deleted.
void prepare_run_dir(const std::filesystem::path& dir);

// validate + prepare dir + execute + emit + manifest.  A failing stage still
// leaves config.txt and a manifest carrying error_stage/error_message, then
// rethrows with the stage tag prefixed to the message.
RunManifest run_single(const RunConfig& cfg);

// One cell of a parameter sweep.
struct SweepRow {
  double eps = 0.0, beta_star = 0.0;
  bool ok = false;             // run completed (or was flagged, see below)
  bool no_steepening = false;  // no slope can form: flagged, not run
  std::string error;           // stage-tagged message when a run failed
  double t_star = 0.0;         // NaN when unavailable
  double x_star = 0.0;
  double seminorm_h5 = 0.0;
  bool verdict_pass = false;
  std::string dir;             // run subdirectory, relative to the sweep dir
};

struct SweepResult {
  std::vector<SweepRow> rows;  // eps-major, beta-minor axis order
  std::optional<LifespanFit> lifespan;   // over completed runs with max(eps, beta*) > 0
  std::string lifespan_note;             // why absent
  std::optional<ScalingReport> scaling;  // rest seeds only
  std::string scaling_note;              // why absent
  bool all_pass = false;  // no crashed cell, lifespan in band, scaling passes (when evaluated)
  std::filesystem::path dir;
};

// Cross product of cfg.sweep_eps x cfg.sweep_beta (an empty axis holds the
// configured model value), distributed over cfg.workers threads; each cell
// runs in its own subdirectory under <out_dir>/runs.  Results are identical
// for every worker count.  Cells that cannot steepen are flagged and not
// run; cells that fail are recorded and excluded from the fits.
SweepResult run_sweep(const RunConfig& cfg);

// Regenerate the plot-ready tables of a completed run directory from its
// primary artifacts (marks, modulation, frames, report): rate_product.csv,
// convergence.csv, overlay.csv, bootstrap.csv; cusp_pairs.csv is kept when
// present (it needs field data that is not stored).  Tables whose inputs are
// missing are reported absent.  The manifest is refreshed.
struct PlotData {
  std::vector<std::string> emitted;
  std::vector<std::string> absent;
};
PlotData emit_plotdata(const std::filesystem::path& run_dir);

}  // namespace swbreak
