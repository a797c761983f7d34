#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fracslice/acceptance.hpp"
#include "fracslice/config.hpp"
#include "fracslice/csv.hpp"
#include "fracslice/dynamics.hpp"
#include "fracslice/ifs.hpp"
#include "fracslice/measure.hpp"
#include "fracslice/rng.hpp"
#include "fracslice/scenario.hpp"
#include "fracslice/slice.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fracslice;

/// [system] family = cube | square | cantor, ratio, ifs_file (overrides the
/// family).  Utility commands share this section with scenario files, so a
/// scenario config can be explored with `density`/`slice` directly.
Ifs utility_ifs(const Config& cfg) {
  std::string file = cfg.get_string("system", "ifs_file", "");
  if (!file.empty()) return load_ifs(file);
  std::string family = cfg.get_string("system", "family", "cube");
  double ratio = cfg.get_double("system", "ratio", family == "cantor" ? 1.0 / 3.0 : 0.45);
  if (family == "cube") return corner_cube_ifs(ratio);
  if (family == "square") return corner_square_ifs(ratio);
  if (family == "cantor") return cantor_ifs(ratio);
  throw config_error("unknown system.family: " + family + " (cube, square, cantor)");
}

/// Largest depth whose atom count stays within `budget`.
int default_depth(const Ifs& f, uint64_t budget) {
  int depth = 1;
  uint64_t atoms = f.branching();
  while (atoms * f.branching() <= budget) {
    atoms *= f.branching();
    ++depth;
  }
  return depth;
}

int measure_depth(const Config& cfg, const Ifs& f) {
  int depth = int(cfg.get_int("system", "depth", default_depth(f, uint64_t(1) << 18)));
  if (depth < 1) throw config_error("system.depth must be >= 1");
  double atoms = std::pow(double(f.branching()), depth);
  if (atoms > double(kAtomCap))
    throw config_error("system.depth " + std::to_string(depth) + " needs " +
                       std::to_string(uint64_t(atoms)) + " atoms, over the cap " +
                       std::to_string(kAtomCap));
  return depth;
}

LadderParams ladder_params(const Config& cfg) {
  LadderParams p;
  p.eps0 = cfg.get_double("ladder", "eps0", p.eps0);
  p.levels = int(cfg.get_int("ladder", "levels", p.levels));
  p.guard = cfg.get_double("ladder", "guard", p.guard);
  if (p.eps0 < 0 || p.levels < 1 || p.guard < 1)
    throw config_error("ladder parameters out of range");
  return p;
}

Subspace sample_direction(const Ifs& f, const Config& cfg, const char* section,
                          std::mt19937_64& rng) {
  int dim = int(cfg.get_int(section, "slice_dim", f.ambient - 1));
  if (dim < 1 || dim >= f.ambient)
    throw config_error(std::string(section) + ".slice_dim must be in [1, ambient)");
  Eigen::MatrixXd d(f.ambient, dim);
  for (int i = 0; i < f.ambient; ++i)
    for (int j = 0; j < dim; ++j) d(i, j) = standard_normal(rng);
  return span_subspace(d);
}

std::vector<std::string> coord_header(const std::string& prefix, int n) {
  std::vector<std::string> h;
  for (int i = 0; i < n; ++i) h.push_back(prefix + std::to_string(i));
  return h;
}

int cmd_ifs(const Config& cfg, const std::string& out, bool out_set) {
  Ifs f = utility_ifs(cfg);
  std::cout << "maps = " << f.branching() << "\n";
  std::cout << "ambient = " << f.ambient << "\n";
  std::cout << "dimension = " << csv_double(f.dimension) << "\n";
  std::cout << "min_ratio = " << csv_double(f.min_ratio) << "\n";
  std::cout << "separation = " << csv_double(f.separation) << "\n";
  std::cout << "diameter = " << csv_double(f.diameter) << "\n";
  if (out_set) {
    int depth = measure_depth(cfg, f);
    DiscreteMeasure mu = attractor_atoms(f, depth);
    fs::create_directories(out);
    std::vector<std::string> header = {"atom"};
    for (auto& c : coord_header("x", f.ambient)) header.push_back(c);
    header.push_back("weight");
    CsvWriter csv((fs::path(out) / "atoms.csv").string(), header);
    for (int64_t i = 0; i < int64_t(mu.points.cols()); ++i) {
      csv.field(i);
      for (int d = 0; d < f.ambient; ++d) csv.field(mu.points(d, i));
      csv.field(mu.weights(i));
      csv.end_row();
    }
    std::cout << "atoms = " << mu.points.cols() << " at depth " << depth << " -> " << csv.path()
              << "\n";
  }
  return 0;
}

int cmd_project(const Config& cfg, uint64_t seed, const std::string& out) {
  Ifs f = utility_ifs(cfg);
  if (f.ambient < 2) throw config_error("project needs an ambient dimension >= 2");
  int depth = measure_depth(cfg, f);
  auto rng = make_stream(seed, "project", 0);
  Subspace v = sample_direction(f, cfg, "project", rng);
  DiscreteMeasure mu = attractor_atoms(f, depth);
  DiscreteMeasure nu = pushforward_project(mu, v);
  if (nu.points.rows() != 1)
    throw config_error("project writes a histogram, so the slab co-dimension must be 1; set "
                       "project.slice_dim = ambient - 1");
  int bins = int(cfg.get_int("project", "bins", 256));
  if (bins < 2) throw config_error("project.bins must be >= 2");
  double lo = nu.points.row(0).minCoeff(), hi = nu.points.row(0).maxCoeff();
  double width = (hi - lo) / bins;
  if (width <= 0) width = 1;
  std::vector<double> mass(size_t(bins), 0.0);
  for (int64_t i = 0; i < int64_t(nu.points.cols()); ++i) {
    int b = std::min(bins - 1, std::max(0, int((nu.points(0, i) - lo) / width)));
    mass[size_t(b)] += nu.weights(i);
  }
  fs::create_directories(out);
  CsvWriter csv((fs::path(out) / "projection.csv").string(), {"bin", "center", "mass"});
  for (int b = 0; b < bins; ++b) {
    csv.field(int64_t(b)).field(lo + (b + 0.5) * width).field(mass[size_t(b)]);
    csv.end_row();
  }
  std::cout << "projected " << mu.points.cols() << " atoms onto a codimension-1 line, support ["
            << csv_double(lo) << ", " << csv_double(hi) << "] -> " << csv.path() << "\n";
  return 0;
}

int cmd_density(const Config& cfg, uint64_t seed, const std::string& out) {
  Ifs f = utility_ifs(cfg);
  if (f.ambient < 2) throw config_error("density needs an ambient dimension >= 2");
  int depth = measure_depth(cfg, f);
  auto rng = make_stream(seed, "density", 0);
  Eigen::VectorXd x = sample_attractor(f, rng);
  Subspace v = sample_direction(f, cfg, "density", rng);
  DiscreteMeasure mu = attractor_atoms(f, depth);
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(f.ambient, f.ambient);
  DensityProfile prof = f_estimate(mu, x, h, v, ladder_params(cfg));
  fs::create_directories(out);
  CsvWriter csv((fs::path(out) / "profile.csv").string(),
                {"level", "eps", "mass", "ratio", "in_window"});
  for (size_t j = 0; j < prof.eps.size(); ++j) {
    double ball = prof.ratio[j] * std::pow(2 * prof.eps[j], prof.exponent);
    csv.field(int64_t(j)).field(prof.eps[j]).field(ball).field(prof.ratio[j]).field(
        int(prof.in_window[j]));
    csv.end_row();
  }
  std::cout << "theta_lower_hat = " << csv_double(prof.theta_lower_hat) << "\n";
  std::cout << "theta_upper_hat = " << csv_double(prof.theta_upper_hat) << "\n";
  std::cout << prof.eps.size() << " ladder scales -> " << csv.path() << "\n";
  return 0;
}

int cmd_orbit(const Config& cfg, uint64_t seed, const std::string& out) {
  Ifs f = utility_ifs(cfg);
  SkewSystem sys = make_skew_system(f);
  int steps = int(cfg.get_int("orbit", "steps", 60));
  if (steps < 1) throw config_error("orbit.steps must be >= 1");
  auto rng = make_stream(seed, "orbit", 0);
  SkewOrbit orbit(sys, rng);
  fs::create_directories(out);
  std::vector<std::string> header = {"k", "next_symbol"};
  for (auto& c : coord_header("x", f.ambient)) header.push_back(c);
  CsvWriter csv((fs::path(out) / "orbit.csv").string(), header);
  for (int k = 0; k < steps; ++k) {
    SkewState s = orbit.state();
    csv.field(int64_t(k)).field(int64_t(orbit.word(1)[0]));
    for (int d = 0; d < f.ambient; ++d) csv.field(s.x(d));
    csv.end_row();
    orbit.advance();
  }
  std::cout << steps << " orbit steps -> " << csv.path() << "\n";
  return 0;
}

int cmd_slice(const Config& cfg, uint64_t seed, const std::string& out) {
  Ifs f = utility_ifs(cfg);
  if (f.ambient < 2) throw config_error("slice needs an ambient dimension >= 2");
  int depth = measure_depth(cfg, f);
  auto rng = make_stream(seed, "slice", 0);
  Eigen::VectorXd x = sample_attractor(f, rng);
  Subspace v = sample_direction(f, cfg, "slice", rng);
  DiscreteMeasure mu = attractor_atoms(f, depth);
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(f.ambient, f.ambient);
  LadderParams params = ladder_params(cfg);
  int k_max = int(cfg.get_int("slice", "k_max", 4));
  if (k_max < 0) throw config_error("slice.k_max must be >= 0");
  fs::create_directories(out);
  CsvWriter csv((fs::path(out) / "slice.csv").string(),
                {"k", "word", "direct", "recursion", "rel_gap"});
  for (int k = 0; k <= k_max; ++k) {
    Word w = code_of_point(f, x, k);
    MassEstimate direct = conditional_mass_direct(mu, x, v, w, params);
    MassEstimate rec = conditional_mass_recursion(f, mu, x, h, v, k, params);
    double gap = std::abs(rec.value - direct.value) / std::max(direct.value, 1e-300);
    csv.field(int64_t(k))
        .field(word_string(w, f.branching()))
        .field(direct.value)
        .field(rec.value)
        .field(gap);
    csv.end_row();
  }
  std::cout << "conditional masses for k <= " << k_max << " -> " << csv.path() << "\n";
  if (cfg.get_bool("slice", "boxdim", false)) {
    int j_min = int(cfg.get_int("slice", "j_min", 4));
    int j_max = int(cfg.get_int("slice", "j_max", 18));
    if (j_min < 0 || j_max <= j_min) throw config_error("slice.j_min/j_max out of order");
    BoxCountFit fit = slice_box_dimension(f, x, v, j_min, j_max);
    CsvWriter box((fs::path(out) / "boxdim.csv").string(), {"level", "eps", "count"});
    for (size_t j = 0; j < fit.eps.size(); ++j) {
      box.field(int64_t(j_min) + int64_t(j)).field(fit.eps[j]).field(fit.counts[j]);
      box.end_row();
    }
    std::cout << "box-count slope = " << csv_double(fit.slope) << " -> " << box.path() << "\n";
  }
  return 0;
}

int cmd_scenario(const std::string& kind, Config cfg, bool seed_set, uint64_t seed, bool out_set,
                 const std::string& out) {
  if (cfg.has("scenario", "kind") && cfg.get_string("scenario", "kind", "") != kind)
    throw config_error("config names scenario.kind = " + cfg.get_string("scenario", "kind", "") +
                       " but the command line says " + kind);
  cfg.set("scenario", "kind", kind);
  if (seed_set) cfg.set("scenario", "seed", std::to_string(seed));
  if (out_set) cfg.set("scenario", "out", out);
  ScenarioConfig sc = scenario_config(cfg);
  RunRecord rec = run_scenario(sc);
  for (const auto& [key, value] : rec.summary) std::cout << key << " = " << value << "\n";
  std::cout << "wall_seconds = " << csv_double(rec.wall_seconds) << "\n";
  std::cout << "artifacts under " << sc.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fracslice " + std::string(kToolVersion) +
               ": self-similar attractors, natural measures, and slice statistics"};
  app.require_subcommand(1);

  std::string config_path, out = "out";
  uint64_t seed = 1;

  auto add_common = [&](CLI::App* sub, bool with_seed = true) {
    sub->add_option("--config", config_path, "key = value config file");
    if (with_seed) sub->add_option("--seed", seed, "master seed for all draws");
    sub->add_option("--out", out, "output directory");
  };

  CLI::App* c_ifs = app.add_subcommand("ifs", "build and validate a system, print its constants");
  add_common(c_ifs, false);
  CLI::App* c_project = app.add_subcommand("project", "histogram of the measure projected onto a "
                                                      "sampled codimension-1 direction");
  add_common(c_project);
  CLI::App* c_density = app.add_subcommand("density", "density profile down the scale ladder at a "
                                                      "sampled point and direction");
  add_common(c_density);
  CLI::App* c_orbit = app.add_subcommand("orbit", "symbol-driven zoom orbit coordinates");
  add_common(c_orbit);
  CLI::App* c_slice = app.add_subcommand("slice", "conditional cylinder masses by both estimators, "
                                                  "optional box-count fit");
  add_common(c_slice);
  std::string kind;
  CLI::App* c_scenario = app.add_subcommand("scenario", "run a full scenario and persist a record");
  c_scenario->add_option("kind", kind,
                         "positive-slices | packing-slices | product-slices | identity-suite | "
                         "custom")
      ->required();
  add_common(c_scenario);
  CLI::App* c_plot = app.add_subcommand("plot", "emit gnuplot scripts next to the CSVs in --out");
  add_common(c_plot);
  CLI::App* c_selftest = app.add_subcommand("selftest", "run the full acceptance suite");
  add_common(c_selftest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    Config cfg;
    if (!config_path.empty()) cfg = Config::parse_file(config_path);
    if (c_ifs->parsed()) return cmd_ifs(cfg, out, c_ifs->count("--out") > 0);
    if (c_project->parsed()) return cmd_project(cfg, seed, out);
    if (c_density->parsed()) return cmd_density(cfg, seed, out);
    if (c_orbit->parsed()) return cmd_orbit(cfg, seed, out);
    if (c_slice->parsed()) return cmd_slice(cfg, seed, out);
    if (c_scenario->parsed())
      return cmd_scenario(kind, cfg, c_scenario->count("--seed") > 0, seed,
                          c_scenario->count("--out") > 0, out);
    if (c_plot->parsed()) {
      std::vector<std::string> files = emit_plots(out);
      for (const auto& p : files) std::cout << p << "\n";
      return 0;
    }
    if (c_selftest->parsed()) {
      if (c_selftest->count("--out") == 0) out = "acceptance_out";
      if (c_selftest->count("--seed") == 0) seed = 7;
      auto results = run_acceptance(seed, out, std::cout);
      return all_passed(results) ? 0 : 1;
    }
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
