#include "fracslice/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

#include "fracslice/csv.hpp"
#include "fracslice/dynamics.hpp"
#include "fracslice/group.hpp"
#include "fracslice/ifs.hpp"
#include "fracslice/rng.hpp"

namespace fracslice {

namespace {

constexpr int kRenormSamples = 200;
constexpr int kRenormKMax = 40;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "scenario.kind",     "scenario.seed",      "scenario.out",
      "scenario.samples",  "scenario.steps",     "system.ratio",
      "system.depth",      "system.ifs_file",    "system.slice_dim",
      "system.a",          "system.b",           "system.tau",
      "system.depth_x",    "system.depth_y",     "ladder.eps0",
      "ladder.levels",     "ladder.guard",       "classify.blowup",
      "classify.min_steps", "classify.trend_margin", "checks.bound_samples",
      "checks.bound_k_max", "checks.identity_samples",
  };
  return keys;
}

bool needs_traces(ScenarioKind k) { return k != ScenarioKind::identity_suite; }

void check_atom_budget(uint32_t branching, int depth) {
  if (std::pow(double(branching), double(depth)) > double(kAtomCap))
    throw config_error("depth " + std::to_string(depth) + " with " + std::to_string(branching) +
                       " maps exceeds the atom budget");
}

/// Builds (and thereby validates) the system a trace scenario runs on.
Ifs slice_family(const ScenarioConfig& sc) {
  Ifs f;
  if (!sc.ifs_file.empty()) {
    try {
      f = load_ifs(sc.ifs_file);
    } catch (const std::exception& e) {
      throw config_error(std::string("cannot load system: ") + e.what());
    }
  } else {
    f = corner_cube_ifs(sc.ratio);
  }
  if (sc.kind != ScenarioKind::custom && f.ambient != 3)
    throw config_error("slice-trace scenarios run on systems in R^3");
  if (sc.slice_dim < 1 || sc.slice_dim >= f.ambient)
    throw config_error("slice_dim must lie strictly between 0 and the ambient dimension");
  if (!(f.dimension > double(sc.slice_dim)))
    throw config_error("attractor dimension " + csv_double(f.dimension) +
                       " does not exceed the slice dimension; slices carry no mass");
  check_atom_budget(f.branching(), sc.depth);
  try {
    make_skew_system(f);
  } catch (const std::exception& e) {
    throw config_error(std::string("rotation closure fails the finiteness check: ") + e.what());
  }
  return f;
}

ProductSystem product_family(const ScenarioConfig& sc) {
  try {
    ProductSystem sys = make_product_system(cantor_ifs(sc.a), cantor_ifs(sc.b), sc.tau);
    if (!(sys.eta > 0))
      throw config_error("factor dimensions sum to " + csv_double(sys.da + sys.db) +
                         "; slices of the product need the sum above one");
    return sys;
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error(std::string("product family rejected: ") + e.what());
  }
}

std::string clean_note(std::string s) {
  for (char& c : s) {
    if (c == ',') c = ';';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

void run_pool(int n, const std::function<void(int)>& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  int workers = std::min({n, int(hw ? hw : 1), 8});
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(size_t(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

struct SampleOutcome {
  OrbitTrace trace;
  Classification cl;
  bool classified = false;
  std::string note;
};

int64_t ok_steps(const OrbitTrace& tr) {
  int64_t n = 0;
  for (const auto& st : tr.steps) n += st.ok ? 1 : 0;
  return n;
}

void add(RunRecord& rec, const std::string& key, const std::string& value) {
  rec.summary.emplace_back(key, value);
}

void add(RunRecord& rec, const std::string& key, double value) {
  rec.summary.emplace_back(key, csv_double(value));
}

void write_outcomes(const ScenarioConfig& sc, const std::vector<SampleOutcome>& out,
                    RunRecord& rec, bool packing_first) {
  std::filesystem::path dir(sc.out_dir);
  {
    CsvWriter csv((dir / "traces.csv").string(),
                  {"sample", "k", "word", "scale", "f_lower", "f_upper", "ok", "note"});
    for (size_t i = 0; i < out.size(); ++i)
      for (const auto& st : out[i].trace.steps) {
        csv.field(int64_t(i))
            .field(int64_t(st.k))
            .field(st.word)
            .field(st.scale)
            .field(st.ok ? st.f_lower : 0.0)
            .field(st.ok ? st.f_upper : 0.0)
            .field(int(st.ok))
            .field(clean_note(st.note));
        csv.end_row();
      }
    rec.csv_files.push_back("traces.csv");
  }
  {
    CsvWriter csv((dir / "samples.csv").string(),
                  {"sample", "verdict", "median", "max_value", "min_value", "max_growing",
                   "min_falling", "steps_ok", "failures", "blowup", "min_steps", "trend_margin",
                   "note"});
    for (size_t i = 0; i < out.size(); ++i) {
      const SampleOutcome& s = out[i];
      csv.field(int64_t(i))
          .field(s.classified ? verdict_name(s.cl.verdict) : std::string("unclassified"))
          .field(s.cl.median)
          .field(s.cl.max_value)
          .field(s.cl.min_value)
          .field(int(s.cl.max_growing))
          .field(int(s.cl.min_falling))
          .field(ok_steps(s.trace))
          .field(int64_t(s.trace.failures))
          .field(sc.thresholds.blowup)
          .field(int64_t(sc.thresholds.min_steps))
          .field(sc.thresholds.trend_margin)
          .field(clean_note(s.classified ? s.cl.note : s.note));
      csv.end_row();
    }
    rec.csv_files.push_back("samples.csv");
  }

  int n = int(out.size());
  int classified = 0, pos = 0, zero = 0, pinf = 0, inc = 0;
  std::vector<double> medians;
  double failures = 0;
  for (const auto& s : out) {
    failures += double(s.trace.failures);
    if (!s.classified) continue;
    ++classified;
    medians.push_back(s.cl.median);
    switch (s.cl.verdict) {
      case Verdict::h_positive: ++pos; break;
      case Verdict::h_zero: ++zero; break;
      case Verdict::p_infinite: ++pinf; break;
      default: ++inc; break;
    }
  }
  add(rec, "samples", std::to_string(n));
  add(rec, "classified", std::to_string(classified));
  if (packing_first) {
    add(rec, "fraction-p-infinite", double(pinf) / n);
    add(rec, "fraction-h-positive", double(pos) / n);
  } else {
    add(rec, "fraction-h-positive", double(pos) / n);
    add(rec, "fraction-p-infinite", double(pinf) / n);
  }
  add(rec, "fraction-h-zero", double(zero) / n);
  add(rec, "fraction-inconclusive", double(inc) / n);
  add(rec, "fraction-unclassified", double(n - classified) / n);
  if (!medians.empty()) {
    std::sort(medians.begin(), medians.end());
    add(rec, "median-of-medians", medians[medians.size() / 2]);
  }
  add(rec, "mean-failures-per-trace", failures / n);
}

void classify_outcome(const ScenarioConfig& sc, SampleOutcome& s) {
  try {
    s.cl = classify(s.trace, sc.thresholds);
    s.classified = true;
  } catch (const std::exception& e) {
    s.note = e.what();
  }
}

void run_slice_scenario(const ScenarioConfig& sc, RunRecord& rec) {
  Ifs f = slice_family(sc);
  SkewSystem sys = make_skew_system(f);
  DiscreteMeasure mu = attractor_atoms(f, sc.depth);
  std::vector<SampleOutcome> out(size_t(sc.samples));
  run_pool(sc.samples, [&](int i) {
    SampleOutcome& s = out[size_t(i)];
    try {
      auto rng = make_stream(sc.seed, "slice-trace", uint64_t(i));
      Eigen::MatrixXd g(f.ambient, sc.slice_dim);
      for (int r = 0; r < g.rows(); ++r)
        for (int c = 0; c < g.cols(); ++c) g(r, c) = standard_normal(rng);
      Subspace v = span_subspace(g);
      s.trace = skew_density_trace(sys, mu, v, rng, sc.steps, sc.ladder);
      classify_outcome(sc, s);
    } catch (const std::exception& e) {
      s.note = e.what();
    }
  });
  write_outcomes(sc, out, rec, sc.kind == ScenarioKind::packing_slices);
}

std::pair<int64_t, int64_t> line_block(const LineMeasure& lm, const Word& w) {
  int64_t stride = 1;
  for (int d = int(w.size()); d < lm.tree_depth; ++d) stride *= lm.branching;
  int64_t begin = int64_t(word_index(w, lm.branching)) * stride;
  return {begin, begin + stride};
}

Word random_word(uint32_t branching, int len, std::mt19937_64& rng) {
  Word w(static_cast<size_t>(len));
  for (auto& sym : w) sym = uint32_t(uniform_index(rng, branching));
  return w;
}

void run_product_scenario(const ScenarioConfig& sc, RunRecord& rec) {
  ProductSystem sys = product_family(sc);
  ProductMeasure pm = product_cantor_measure(sys.fa, sc.depth_x, sys.fb, sc.depth_y);
  std::filesystem::path dir(sc.out_dir);

  std::vector<SampleOutcome> out(size_t(sc.samples));
  run_pool(sc.samples, [&](int i) {
    SampleOutcome& s = out[size_t(i)];
    try {
      auto rng = make_stream(sc.seed, "product-trace", uint64_t(i));
      s.trace = product_density_trace(sys, pm, rng, sc.steps, sc.ladder);
      classify_outcome(sc, s);
    } catch (const std::exception& e) {
      s.note = e.what();
    }
  });
  write_outcomes(sc, out, rec, false);

  {
    CsvWriter csv((dir / "renorm.csv").string(), {"sample", "t0", "k", "l", "t_k", "residual"});
    double worst = 0;
    for (int i = 0; i < kRenormSamples; ++i) {
      auto rng = make_stream(sc.seed, "direction-return", uint64_t(i));
      double t0 = uniform_unit(rng);
      int k = 1 + int(uniform_index(rng, kRenormKMax));
      RenormCheck rc = renormalize_direction(sys, t0, k);
      worst = std::max(worst, rc.residual);
      csv.field(int64_t(i)).field(t0).field(int64_t(k)).field(int64_t(rc.l)).field(rc.t_k).field(
          rc.residual);
      csv.end_row();
    }
    rec.csv_files.push_back("renorm.csv");
    add(rec, "renorm-samples", std::to_string(kRenormSamples));
    add(rec, "renorm-max-residual", worst);
  }

  {
    struct BoundRow {
      double zx = 0, zy = 0, t0 = 0;
      int k = 0, l = 0;
      CylinderBound b;
      bool ok = false;
      std::string note;
    };
    std::vector<BoundRow> rows(size_t(sc.bound_samples));
    // the spot checks keep the default wide ladder: the trace window is often
    // too narrow to anchor the base-point profile
    LadderParams wide;
    run_pool(sc.bound_samples, [&](int i) {
      BoundRow& r = rows[size_t(i)];
      auto rng = make_stream(sc.seed, "cylinder-bound", uint64_t(i));
      r.zx = attractor_point(sys.fa, sample_word(sys.fa, rng, 40))(0);
      r.zy = attractor_point(sys.fb, sample_word(sys.fb, rng, 40))(0);
      r.t0 = uniform_unit(rng);
      r.k = 1 + int(uniform_index(rng, uint64_t(sc.bound_k_max)));
      try {
        r.b = product_cylinder_lower_bound(sys, pm, Eigen::Vector2d(r.zx, r.zy), r.t0, r.k, wide);
        r.l = r.b.l;
        r.ok = true;
      } catch (const std::exception& e) {
        r.note = e.what();
      }
    });
    CsvWriter csv((dir / "bounds.csv").string(),
                  {"sample", "zx", "zy", "t0", "k", "l", "lower", "direct", "variation", "slack",
                   "holds", "note"});
    int held = 0;
    for (size_t i = 0; i < rows.size(); ++i) {
      const BoundRow& r = rows[i];
      bool holds = r.ok && r.b.holds;
      held += holds ? 1 : 0;
      csv.field(int64_t(i))
          .field(r.zx)
          .field(r.zy)
          .field(r.t0)
          .field(int64_t(r.k))
          .field(int64_t(r.l))
          .field(r.b.lower)
          .field(r.b.direct)
          .field(r.b.direct_report.variation)
          .field(r.b.slack)
          .field(int(holds))
          .field(clean_note(r.note));
      csv.end_row();
    }
    rec.csv_files.push_back("bounds.csv");
    add(rec, "bound-samples", std::to_string(sc.bound_samples));
    add(rec, "bound-hold-fraction", double(held) / sc.bound_samples);
  }

  {
    CsvWriter csv((dir / "blocks.csv").string(),
                  {"sample", "n1", "n2", "block_depth_x", "block_depth_y", "base_mass",
                   "image_mass", "gap"});
    double worst = 0;
    for (int i = 0; i < sc.identity_samples; ++i) {
      auto rng = make_stream(sc.seed, "block-scaling", uint64_t(i));
      int n1 = 1 + int(uniform_index(rng, 3));
      int n2 = 1 + int(uniform_index(rng, 3));
      Word w1 = random_word(2, n1, rng);
      Word w2 = random_word(2, n2, rng);
      Word bx = random_word(2, int(uniform_index(rng, uint64_t(sc.depth_x - n1 + 1))), rng);
      Word by = random_word(2, int(uniform_index(rng, uint64_t(sc.depth_y - n2 + 1))), rng);
      auto [xb, xe] = line_block(pm.x, bx);
      auto [yb, ye] = line_block(pm.y, by);
      double base = pm.block_mass(xb, xe, yb, ye);
      Word ix = w1, iy = w2;
      ix.insert(ix.end(), bx.begin(), bx.end());
      iy.insert(iy.end(), by.begin(), by.end());
      auto [ixb, ixe] = line_block(pm.x, ix);
      auto [iyb, iye] = line_block(pm.y, iy);
      double image = pm.block_mass(ixb, ixe, iyb, iye);
      double gap = std::abs(image - std::pow(2.0, -double(n1 + n2)) * base);
      worst = std::max(worst, gap);
      csv.field(int64_t(i))
          .field(int64_t(n1))
          .field(int64_t(n2))
          .field(int64_t(bx.size()))
          .field(int64_t(by.size()))
          .field(base)
          .field(image)
          .field(gap);
      csv.end_row();
    }
    rec.csv_files.push_back("blocks.csv");
    add(rec, "block-pairs", std::to_string(sc.identity_samples));
    add(rec, "block-max-gap", worst);
  }
}

void run_identity_scenario(const ScenarioConfig& sc, RunRecord& rec) {
  std::vector<IdentityCheck> checks = run_identity_checks(sc.seed, sc.identity_samples);
  CsvWriter csv((std::filesystem::path(sc.out_dir) / "identity.csv").string(),
                {"name", "samples", "worst", "tolerance", "pass"});
  bool all = true;
  for (const auto& c : checks) {
    csv.field(c.name)
        .field(int64_t(c.samples))
        .field(c.worst)
        .field(c.tolerance)
        .field(int(c.pass));
    csv.end_row();
    add(rec, c.name + "-worst", c.worst);
    add(rec, c.name + "-pass", std::string(c.pass ? "1" : "0"));
    all = all && c.pass;
  }
  rec.csv_files.push_back("identity.csv");
  add(rec, "all-pass", std::string(all ? "1" : "0"));
}

}  // namespace

ScenarioKind scenario_kind_from_name(const std::string& name) {
  if (name == "positive-slices") return ScenarioKind::positive_slices;
  if (name == "packing-slices") return ScenarioKind::packing_slices;
  if (name == "product-slices") return ScenarioKind::product_slices;
  if (name == "identity-suite") return ScenarioKind::identity_suite;
  if (name == "custom") return ScenarioKind::custom;
  throw config_error("unknown scenario kind: " + name);
}

std::string scenario_kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::positive_slices: return "positive-slices";
    case ScenarioKind::packing_slices: return "packing-slices";
    case ScenarioKind::product_slices: return "product-slices";
    case ScenarioKind::identity_suite: return "identity-suite";
    default: return "custom";
  }
}

ScenarioConfig scenario_config(const Config& cfg) {
  for (const auto& [key, value] : cfg.entries()) {
    (void)value;
    if (!known_keys().count(key)) throw config_error("unknown config key: " + key);
  }
  if (!cfg.has("scenario", "kind")) throw config_error("missing scenario.kind");
  if (!cfg.has("scenario", "seed"))
    throw config_error("missing scenario.seed: runs never take ambient entropy");

  ScenarioConfig sc;
  sc.kind = scenario_kind_from_name(cfg.get_string("scenario", "kind", ""));
  sc.seed = uint64_t(cfg.get_int("scenario", "seed", 0));
  sc.out_dir = cfg.get_string("scenario", "out", sc.out_dir);
  sc.samples = int(cfg.get_int("scenario", "samples", sc.samples));
  sc.steps = int(cfg.get_int("scenario", "steps", 0));

  sc.ratio = cfg.get_double("system", "ratio", sc.ratio);
  sc.depth = int(cfg.get_int("system", "depth", sc.depth));
  sc.ifs_file = cfg.get_string("system", "ifs_file", "");
  sc.slice_dim = int(cfg.get_int("system", "slice_dim", sc.slice_dim));
  sc.a = cfg.get_double("system", "a", sc.a);
  sc.b = cfg.get_double("system", "b", sc.b);
  sc.tau = cfg.get_double("system", "tau", sc.tau);
  sc.depth_x = int(cfg.get_int("system", "depth_x", sc.depth_x));
  sc.depth_y = int(cfg.get_int("system", "depth_y", sc.depth_y));

  sc.ladder.eps0 = cfg.get_double("ladder", "eps0", -1.0);
  sc.ladder.levels = int(cfg.get_int("ladder", "levels", 0));
  sc.ladder.guard = cfg.get_double("ladder", "guard", sc.ladder.guard);

  sc.thresholds.blowup = cfg.get_double("classify", "blowup", sc.thresholds.blowup);
  sc.thresholds.min_steps = int(cfg.get_int("classify", "min_steps", sc.thresholds.min_steps));
  sc.thresholds.trend_margin =
      cfg.get_double("classify", "trend_margin", sc.thresholds.trend_margin);

  sc.bound_samples = int(cfg.get_int("checks", "bound_samples", sc.bound_samples));
  sc.bound_k_max = int(cfg.get_int("checks", "bound_k_max", sc.bound_k_max));
  sc.identity_samples = int(cfg.get_int("checks", "identity_samples", sc.identity_samples));

  // per-kind defaults for the knobs left unset
  if (sc.steps == 0) {
    switch (sc.kind) {
      case ScenarioKind::packing_slices: sc.steps = 240; break;
      case ScenarioKind::product_slices: sc.steps = 150; break;
      case ScenarioKind::identity_suite: sc.steps = 0; break;
      default: sc.steps = 40; break;
    }
  }
  if (sc.ladder.eps0 < 0)
    sc.ladder.eps0 = sc.kind == ScenarioKind::product_slices ? 2e-6 : 0.0;
  if (sc.ladder.levels == 0)
    sc.ladder.levels = sc.kind == ScenarioKind::product_slices ? 3 : 12;

  if (sc.samples < 1 || sc.samples > 100000)
    throw config_error("samples must lie in [1, 100000]");
  if (sc.ladder.levels < 1 || sc.ladder.levels > 40)
    throw config_error("ladder levels must lie in [1, 40]");
  if (!(sc.ladder.guard >= 1)) throw config_error("ladder guard must be at least 1");
  if (!(sc.ladder.eps0 >= 0)) throw config_error("ladder eps0 must be nonnegative");
  if (!(sc.thresholds.blowup > 1)) throw config_error("classify blowup must exceed 1");
  if (sc.thresholds.min_steps < 3) throw config_error("classify min_steps must be at least 3");
  if (!(sc.thresholds.trend_margin >= 0 && sc.thresholds.trend_margin < 1))
    throw config_error("classify trend_margin must lie in [0, 1)");
  if (sc.bound_samples < 1) throw config_error("bound_samples must be positive");
  if (sc.bound_k_max < 1 || sc.bound_k_max > kRenormKMax)
    throw config_error("bound_k_max must lie in [1, 40]");
  if (sc.identity_samples < 1) throw config_error("identity_samples must be positive");

  if (needs_traces(sc.kind)) {
    if (sc.steps < sc.thresholds.min_steps)
      throw config_error("steps must reach classify min_steps; traces would be unclassifiable");
    if (sc.steps > 100000) throw config_error("steps must stay within 100000");
  }

  switch (sc.kind) {
    case ScenarioKind::positive_slices:
    case ScenarioKind::packing_slices: {
      if (!(sc.ratio > 0 && sc.ratio < 0.5))
        throw config_error("ratio must lie in (0, 0.5) to keep the pieces separated");
      if (sc.depth < 1) throw config_error("depth must be positive");
      Ifs f = slice_family(sc);
      if (!(f.dimension > 2))
        throw config_error("attractor dimension " + csv_double(f.dimension) +
                           " is not above 2, so codimension-1 slice densities have no "
                           "bounded regime to detect");
      break;
    }
    case ScenarioKind::product_slices: {
      if (sc.depth_x < 2 || sc.depth_x > 24 || sc.depth_y < 2 || sc.depth_y > 24)
        throw config_error("factor depths must lie in [2, 24]");
      if (!(sc.a > 0 && sc.a < sc.b && sc.b < 0.5))
        throw config_error("factor ratios must satisfy 0 < a < b < 1/2");
      product_family(sc);
      break;
    }
    case ScenarioKind::custom: {
      if (sc.ifs_file.empty())
        throw config_error("custom scenarios need system.ifs_file");
      if (sc.depth < 1) throw config_error("depth must be positive");
      if (!cfg.has("system", "slice_dim")) {
        // codimension-1 slices whatever the ambient dimension
        try {
          sc.slice_dim = load_ifs(sc.ifs_file).ambient - 1;
        } catch (const std::exception& e) {
          throw config_error(std::string("cannot load system: ") + e.what());
        }
      }
      slice_family(sc);
      break;
    }
    case ScenarioKind::identity_suite:
      break;
  }
  return sc;
}

std::string render_config(const ScenarioConfig& sc) {
  std::ostringstream out;
  out << "[checks]\n";
  out << "bound_k_max = " << sc.bound_k_max << "\n";
  out << "bound_samples = " << sc.bound_samples << "\n";
  out << "identity_samples = " << sc.identity_samples << "\n";
  out << "[classify]\n";
  out << "blowup = " << csv_double(sc.thresholds.blowup) << "\n";
  out << "min_steps = " << sc.thresholds.min_steps << "\n";
  out << "trend_margin = " << csv_double(sc.thresholds.trend_margin) << "\n";
  out << "[ladder]\n";
  out << "eps0 = " << csv_double(sc.ladder.eps0) << "\n";
  out << "guard = " << csv_double(sc.ladder.guard) << "\n";
  out << "levels = " << sc.ladder.levels << "\n";
  out << "[scenario]\n";
  out << "kind = " << scenario_kind_name(sc.kind) << "\n";
  out << "out = " << sc.out_dir << "\n";
  out << "samples = " << sc.samples << "\n";
  out << "seed = " << sc.seed << "\n";
  out << "steps = " << sc.steps << "\n";
  out << "[system]\n";
  out << "a = " << csv_double(sc.a) << "\n";
  out << "b = " << csv_double(sc.b) << "\n";
  out << "depth = " << sc.depth << "\n";
  out << "depth_x = " << sc.depth_x << "\n";
  out << "depth_y = " << sc.depth_y << "\n";
  if (!sc.ifs_file.empty()) out << "ifs_file = " << sc.ifs_file << "\n";
  out << "ratio = " << csv_double(sc.ratio) << "\n";
  out << "slice_dim = " << sc.slice_dim << "\n";
  out << "tau = " << csv_double(sc.tau) << "\n";
  return out.str();
}

std::vector<IdentityCheck> run_identity_checks(uint64_t seed, int n) {
  if (n < 1) throw scenario_error("identity battery needs a positive sample count");
  std::vector<IdentityCheck> out;

  {
    auto t0 = Clock::now();
    IdentityCheck c{"moran-dimension", 3, 0, 1e-12, false};
    c.worst = std::abs(similarity_dimension({0.25, 0.25}) - 0.5);
    c.worst = std::max(c.worst, std::abs(similarity_dimension({1.0 / 3, 1.0 / 3}) -
                                         std::log(2.0) / std::log(3.0)));
    c.worst = std::max(c.worst, std::abs(similarity_dimension(std::vector<double>(8, 0.45)) -
                                         3 * std::log(2.0) / std::log(1 / 0.45)));
    c.pass = c.worst <= c.tolerance;
    c.seconds = since(t0);
    out.push_back(c);
  }

  {
    auto t0 = Clock::now();
    IdentityCheck c{"group-averaging", n, 0, 1e-12, false};
    auto rng = make_stream(seed, "identity-group");
    for (int i = 0; i < n; ++i) {
      int q = 1 + int(uniform_index(rng, 12));
      std::vector<Eigen::MatrixXd> gens{plane_rotation(2, 0, 1, 2 * M_PI / q)};
      if (uniform_unit(rng) < 0.5) {
        Eigen::MatrixXd refl = Eigen::MatrixXd::Identity(2, 2);
        refl(1, 1) = -1;
        gens.push_back(refl);
      }
      RotationGroup g = close_group(gens);
      std::vector<double> eta(g.order());
      double tot = 0;
      for (auto& e : eta) {
        e = 0.05 + uniform_unit(rng);
        tot += e;
      }
      for (auto& e : eta) e /= tot;
      std::vector<size_t> subset;
      for (size_t j = 0; j < g.order(); ++j)
        if (uniform_unit(rng) < 0.5) subset.push_back(j);
      if (subset.empty()) subset.push_back(size_t(uniform_index(rng, g.order())));
      c.worst = std::max(c.worst, convolution_identity_check(g, eta, subset).gap());
    }
    c.pass = c.worst <= c.tolerance;
    c.seconds = since(t0);
    out.push_back(c);
  }

  {
    auto t0 = Clock::now();
    IdentityCheck c{"cylinder-scaling", n, 0, 1e-12, false};
    auto rng = make_stream(seed, "identity-blocks");
    ProductMeasure pm = product_cantor_measure(cantor_ifs(0.25), 8, cantor_ifs(1.0 / 3), 10);
    for (int i = 0; i < n; ++i) {
      int n1 = 1 + int(uniform_index(rng, 3));
      int n2 = 1 + int(uniform_index(rng, 3));
      Word w1 = random_word(2, n1, rng);
      Word w2 = random_word(2, n2, rng);
      Word bx = random_word(2, int(uniform_index(rng, uint64_t(8 - n1 + 1))), rng);
      Word by = random_word(2, int(uniform_index(rng, uint64_t(10 - n2 + 1))), rng);
      auto [xb, xe] = line_block(pm.x, bx);
      auto [yb, ye] = line_block(pm.y, by);
      double base = pm.block_mass(xb, xe, yb, ye);
      Word ix = w1, iy = w2;
      ix.insert(ix.end(), bx.begin(), bx.end());
      iy.insert(iy.end(), by.begin(), by.end());
      auto [ixb, ixe] = line_block(pm.x, ix);
      auto [iyb, iye] = line_block(pm.y, iy);
      c.worst = std::max(c.worst, std::abs(pm.block_mass(ixb, ixe, iyb, iye) -
                                           std::pow(2.0, -double(n1 + n2)) * base));
    }
    c.pass = c.worst <= c.tolerance;
    c.seconds = since(t0);
    out.push_back(c);
  }

  {
    auto t0 = Clock::now();
    IdentityCheck c{"direction-return", 4 * n, 0, 1e-10, false};
    auto rng = make_stream(seed, "identity-return");
    const double taus[3] = {1.0, 0.25, 4.0};
    ProductSystem sys[3] = {
        make_product_system(cantor_ifs(0.25), cantor_ifs(1.0 / 3), taus[0]),
        make_product_system(cantor_ifs(0.25), cantor_ifs(1.0 / 3), taus[1]),
        make_product_system(cantor_ifs(0.25), cantor_ifs(1.0 / 3), taus[2]),
    };
    for (int i = 0; i < 4 * n; ++i) {
      double t0 = uniform_unit(rng);
      int k = 1 + int(uniform_index(rng, kRenormKMax));
      c.worst = std::max(c.worst, renormalize_direction(sys[i % 3], t0, k).residual);
    }
    c.pass = c.worst <= c.tolerance;
    c.seconds = since(t0);
    out.push_back(c);
  }

  {
    auto t0 = Clock::now();
    IdentityCheck c{"ball-growth", 4 * n, 0, 1.0, false};
    auto rng = make_stream(seed, "identity-frostman");
    Ifs fa = cantor_ifs(0.25), fb = cantor_ifs(1.0 / 3);
    ProductMeasure pm = product_cantor_measure(fa, 12, fb, 12);
    FrostmanReport report = frostman_check(pm, fa, fb, 8, 4 * n, rng);
    c.worst = report.max_ratio;
    c.pass = report.violations == 0;
    c.seconds = since(t0);
    out.push_back(c);
  }

  return out;
}

RunRecord run_scenario(const ScenarioConfig& sc) {
  auto start = Clock::now();
  std::filesystem::create_directories(sc.out_dir);
  RunRecord rec;
  rec.config = sc;
  rec.config_echo = render_config(sc);

  switch (sc.kind) {
    case ScenarioKind::positive_slices:
    case ScenarioKind::packing_slices:
    case ScenarioKind::custom:
      run_slice_scenario(sc, rec);
      break;
    case ScenarioKind::product_slices:
      run_product_scenario(sc, rec);
      break;
    case ScenarioKind::identity_suite:
      run_identity_scenario(sc, rec);
      break;
  }

  {
    CsvWriter csv((std::filesystem::path(sc.out_dir) / "summary.csv").string(), {"key", "value"});
    for (const auto& [key, value] : rec.summary) {
      csv.field(key).field(value);
      csv.end_row();
    }
    rec.csv_files.push_back("summary.csv");
  }

  rec.wall_seconds = since(start);

  std::ofstream record(std::filesystem::path(sc.out_dir) / "record.txt");
  if (!record) throw scenario_error("cannot write record.txt under " + sc.out_dir);
  record << "fracslice " << kToolVersion << "\n";
  record << "kind = " << scenario_kind_name(sc.kind) << "\n";
  record << "wall_seconds = " << csv_double(rec.wall_seconds) << "\n";
  record << "[config]\n" << rec.config_echo;
  record << "[summary]\n";
  for (const auto& [key, value] : rec.summary) record << key << " = " << value << "\n";
  return rec;
}

std::vector<std::string> emit_plots(const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;

  auto emit = [&](const char* csv_name, const char* script_name, const std::string& body) {
    if (!fs::exists(fs::path(out_dir) / csv_name)) return;
    fs::path path = fs::path(out_dir) / script_name;
    std::ofstream out(path);
    if (!out) throw scenario_error("cannot write " + path.string());
    out << body;
    written.push_back(path.string());
  };

  emit("traces.csv", "plot_traces.gp",
       "# run from this directory: gnuplot plot_traces.gp\n"
       "set datafile separator ','\n"
       "stats 'traces.csv' using 1 skip 1 nooutput\n"
       "n = STATS_max\n"
       "set key off\n"
       "set logscale y\n"
       "set xlabel 'step k'\n"
       "set ylabel 'slice density estimate'\n"
       "set term pngcairo size 1200,800\n"
       "set output 'traces.png'\n"
       "plot for [s=0:n] 'traces.csv' skip 1 "
       "using 2:(($1==s && $7==1) ? $5 : 1/0) with lines lt (s%8)+1\n");

  emit("profile.csv", "plot_profile.gp",
       "# run from this directory: gnuplot plot_profile.gp\n"
       "set datafile separator ','\n"
       "set logscale x\n"
       "set xlabel 'scale'\n"
       "set ylabel 'mass ratio'\n"
       "set term pngcairo size 900,600\n"
       "set output 'profile.png'\n"
       "plot 'profile.csv' skip 1 using 2:(($5==1) ? $4 : 1/0) with points pt 7 title 'trusted', \\\n"
       "     'profile.csv' skip 1 using 2:(($5==0) ? $4 : 1/0) with points pt 4 title 'outside window'\n");

  emit("boxdim.csv", "plot_boxdim.gp",
       "# run from this directory: gnuplot plot_boxdim.gp\n"
       "set datafile separator ','\n"
       "set logscale xy\n"
       "set xlabel 'scale'\n"
       "set ylabel 'covering cells'\n"
       "set term pngcairo size 900,600\n"
       "set output 'boxdim.png'\n"
       "f(x) = c - d*x\n"
       "c = 1\n"
       "d = 0.5\n"
       "fit f(x) 'boxdim.csv' skip 1 using (log($2)):(log($3)) via c,d\n"
       "ti = sprintf('slope %.4f', d)\n"
       "plot 'boxdim.csv' skip 1 using 2:3 with points pt 7 title 'counts', \\\n"
       "     exp(f(log(x))) with lines title ti\n");

  if (written.empty())
    throw scenario_error("no plottable CSVs under " + out_dir +
                         ": expected traces.csv, profile.csv, or boxdim.csv");
  return written;
}

}  // namespace fracslice
