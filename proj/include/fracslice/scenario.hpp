#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracslice/config.hpp"
#include "fracslice/measure.hpp"
#include "fracslice/slice.hpp"

namespace fracslice {

inline constexpr const char* kToolVersion = "0.1.0";

struct scenario_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// positive-slices / packing-slices: trace slice densities of a self-similar
/// system in R^3 and report verdict fractions (bounded densities back
/// positive Hausdorff slice measure, collapsing minima back infinite packing
/// measure).  product-slices: the coupled Cantor-product pipeline with its
/// exact-identity reports.  identity-suite: only the exact checks.  custom:
/// the trace pipeline on a system loaded from disk.
enum class ScenarioKind { positive_slices, packing_slices, product_slices, identity_suite, custom };

ScenarioKind scenario_kind_from_name(const std::string& name);
std::string scenario_kind_name(ScenarioKind k);

/// Fully resolved run parameters.  The echo in a RunRecord re-parses to the
/// same struct, so a record regenerates its run exactly.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::identity_suite;
  uint64_t seed = 0;  // mandatory in config files: runs never take ambient entropy
  std::string out_dir = "out";
  int samples = 100;
  int steps = 0;  // 0 picks the per-kind default

  // slice-trace family
  double ratio = 0.45;   // corner-cube contraction
  int depth = 7;         // attractor discretization depth
  std::string ifs_file;  // custom runs load the system from disk
  int slice_dim = 2;     // planes in the ambient cube: codimension-1 slices

  // product family
  double a = 0.25, b = 1.0 / 3.0, tau = 1.0;
  int depth_x = 12, depth_y = 15;

  LadderParams ladder;        // eps0 = 0 resolves to the per-kind default window
  ClassifyParams thresholds;  // persisted with every run

  int bound_samples = 200;  // cylinder lower-bound spot checks
  int bound_k_max = 4;
  int identity_samples = 50;  // per check in the identity battery
};

/// Parse and validate a config.  Throws config_error on a missing seed,
/// unknown keys, out-of-range values, or a system that fails the scenario's
/// preconditions (dimension, separation, finite rotation closure).
ScenarioConfig scenario_config(const Config& cfg);

/// Canonical text form of a resolved config; scenario_config(parse(text))
/// round-trips.
std::string render_config(const ScenarioConfig& sc);

struct RunRecord {
  ScenarioConfig config;
  std::string config_echo;
  std::vector<std::pair<std::string, std::string>> summary;  // stable order
  std::vector<std::string> csv_files;                        // relative to out_dir
  double wall_seconds = 0;
};

/// Run a scenario and persist it under config.out_dir: one CSV per report
/// kind, summary.csv, and record.txt (the only file carrying wall time).
/// Identical config and seed give byte-identical CSVs.
RunRecord run_scenario(const ScenarioConfig& cfg);

/// One exact-identity check: `worst` observed deviation over `samples`
/// randomized instances against the pinned tolerance.
struct IdentityCheck {
  std::string name;
  int samples = 0;
  double worst = 0;
  double tolerance = 0;
  bool pass = false;
  double seconds = 0;
};

/// The shared battery: dimension closed forms, group-averaging convolution,
/// product cylinder scaling, direction-family return, and the ball-growth
/// bound.  `n` scales the per-check sample counts.
std::vector<IdentityCheck> run_identity_checks(uint64_t seed, int n);

/// Write gnuplot scripts next to the CSVs they reference (trace spaghetti,
/// density profile, box-count fit).  Returns the script paths; throws
/// scenario_error when out_dir holds none of the plottable CSVs.
std::vector<std::string> emit_plots(const std::string& out_dir);

}  // namespace fracslice
