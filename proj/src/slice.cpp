#include "fracslice/slice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fracslice/csv.hpp"

namespace fracslice {

namespace {

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

std::vector<double> halving_ladder(double eps0, int levels) {
  if (!(eps0 > 0) || levels < 1) throw slice_error("scale ladder needs eps0 > 0 and levels >= 1");
  std::vector<double> eps(static_cast<size_t>(levels));
  eps[0] = eps0;
  for (int j = 1; j < levels; ++j) eps[size_t(j)] = eps[size_t(j) - 1] * 0.5;
  return eps;
}

/// Ratios across the trusted part of the ladder, folded into the estimate:
/// the value is read at the finest trusted scale, the variation across the
/// last (up to three) trusted scales.
MassEstimate fold_ratios(const std::vector<double>& eps, const std::vector<double>& num,
                         const std::vector<double>& den, double resolution, double guard) {
  int last = -1;
  for (size_t j = 0; j < eps.size(); ++j) {
    if (eps[j] < guard * resolution) break;
    if (!(den[j] > 0))
      throw slice_error("empty slab at a trusted scale: the base point is off the slice support");
    last = static_cast<int>(j);
  }
  if (last < 0) throw slice_error("no trusted scale above the resolution guard");
  MassEstimate est;
  est.used_level = last;
  est.eps = eps[size_t(last)];
  est.value = num[size_t(last)] / den[size_t(last)];
  for (int j = std::max(0, last - 2); j <= last; ++j)
    est.variation = std::max(est.variation, std::abs(num[size_t(j)] / den[size_t(j)] - est.value));
  return est;
}

double auto_eps0(double extent, double resolution, double guard) {
  return extent > 0 ? extent / 4.0 : std::max(resolution * guard * 4.0, 1e-9);
}

std::pair<int64_t, int64_t> line_block(const LineMeasure& lm, const Word& w) {
  if (w.empty()) return {0, lm.size()};
  if (lm.branching == 0) throw slice_error("factor carries no cylinder structure");
  if (static_cast<int>(w.size()) > lm.tree_depth)
    throw slice_error("word is deeper than the factor discretization");
  for (uint32_t sym : w)
    if (sym >= lm.branching) throw slice_error("word symbol outside the factor alphabet");
  int64_t stride = 1;
  for (int i = 0; i < lm.tree_depth - static_cast<int>(w.size()); ++i) stride *= lm.branching;
  int64_t begin = static_cast<int64_t>(word_index(w, lm.branching)) * stride;
  return {begin, begin + stride};
}

void require_usable(const DensityProfile& p, const char* where) {
  if (!(p.theta_lower_hat > 0) || !std::isfinite(p.theta_upper_hat))
    throw slice_error(std::string("conditional mass recursion unavailable: ") + where +
                      " density estimate vanishes or diverges");
}

int profile_used_level(const DensityProfile& p) {
  int last = -1;
  for (size_t j = 0; j < p.eps.size(); ++j)
    if (p.in_window[j]) last = static_cast<int>(j);
  return last < 0 ? static_cast<int>(p.eps.size()) - 1 : last;
}

double fit_slope(const std::vector<double>& eps, const std::vector<int64_t>& counts) {
  // the two coarsest scales carry the largest lattice bias; drop them
  size_t skip = 2;
  size_t n = eps.size() - skip;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = skip; i < eps.size(); ++i) {
    double x = -std::log(eps[i]);
    double y = std::log(static_cast<double>(counts[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

/// Section cells of a one-dimensional factor at scale eps: centers (sorted)
/// and common halfwidth of the first cylinder generation whose halfwidth
/// drops to eps.
std::pair<std::vector<double>, double> section_cells(const Ifs& f, double eps) {
  if (f.ambient != 1) throw slice_error("product factors must be one-dimensional");
  for (const auto& m : f.maps) {
    if (m.ratio != f.min_ratio) throw slice_error("factor must have one contraction ratio");
    if (!(m.rotation(0, 0) > 0)) throw slice_error("factor maps must preserve orientation");
  }
  int d = 0;
  double hw = f.radius;
  while (hw > eps && d < 60) {
    hw *= f.min_ratio;
    ++d;
  }
  DiscreteMeasure atoms = attractor_atoms(f, d);
  double shift = std::pow(f.min_ratio, d) * (f.center(0) - f.anchor(0));
  std::vector<double> centers(static_cast<size_t>(atoms.size()));
  for (int64_t i = 0; i < atoms.size(); ++i)
    centers[size_t(i)] = atoms.points(0, i) + shift;
  std::sort(centers.begin(), centers.end());
  return {std::move(centers), hw};
}

}  // namespace

std::string word_string(const Word& w, uint32_t branching) {
  std::string out;
  bool dots = branching > 10;
  for (size_t i = 0; i < w.size(); ++i) {
    if (dots && i > 0) out += '.';
    out += std::to_string(w[i]);
  }
  return out;
}

MassEstimate conditional_mass_direct(const DiscreteMeasure& mu, const Eigen::VectorXd& x,
                                     const Subspace& v, const Word& w,
                                     const LadderParams& params) {
  if (mu.size() == 0) throw slice_error("conditional mass needs a nonempty measure");
  if (v.ambient() != mu.ambient() || x.size() != mu.ambient())
    throw slice_error("measure, point and subspace dimensions disagree");
  auto block = cylinder_block(mu, w);

  Eigen::MatrixXd proj = v.basis_perp.transpose() * mu.points;
  Eigen::VectorXd px = v.basis_perp.transpose() * x;
  Eigen::VectorXd dist = (proj.colwise() - px).colwise().norm();

  double extent = (proj.rowwise().maxCoeff() - proj.rowwise().minCoeff()).maxCoeff();
  double eps0 = params.eps0 > 0 ? params.eps0 : auto_eps0(extent, mu.resolution, params.guard);
  std::vector<double> eps = halving_ladder(eps0, params.levels);
  size_t levels = eps.size();

  // bin each atom at the finest scale containing it, then suffix-sum
  std::vector<double> num(levels, 0.0), den(levels, 0.0);
  for (int64_t i = 0; i < mu.size(); ++i) {
    double d = dist(i);
    if (d > eps[0]) continue;
    size_t j = 0;
    while (j + 1 < levels && d <= eps[j + 1]) ++j;
    den[j] += mu.weights(i);
    if (i >= block.first && i < block.second) num[j] += mu.weights(i);
  }
  for (size_t j = levels - 1; j > 0; --j) {
    den[j - 1] += den[j];
    num[j - 1] += num[j];
  }
  return fold_ratios(eps, num, den, mu.resolution, params.guard);
}

MassEstimate conditional_mass_direct(const ProductMeasure& pm, const Eigen::Vector2d& z,
                                     const Subspace& v, const Word& wx, const Word& wy,
                                     const LadderParams& params) {
  if (v.ambient() != 2 || v.dim() != 1) throw slice_error("product slices need a line in the plane");
  if (pm.x.size() == 0 || pm.y.size() == 0) throw slice_error("conditional mass needs a nonempty measure");
  auto xb = line_block(pm.x, wx);
  auto yb = line_block(pm.y, wy);
  double ux = v.basis_perp(0, 0), uy = v.basis_perp(1, 0);
  double c = ux * z(0) + uy * z(1);

  double extent = std::abs(ux) * (pm.x.position.back() - pm.x.position.front()) +
                  std::abs(uy) * (pm.y.position.back() - pm.y.position.front());
  double eps0 = params.eps0 > 0 ? params.eps0 : auto_eps0(extent, pm.resolution, params.guard);
  std::vector<double> eps = halving_ladder(eps0, params.levels);

  std::vector<double> num(eps.size(), 0.0), den(eps.size(), 0.0);
  for (size_t j = 0; j < eps.size(); ++j) {
    den[j] = pm.slab_mass(ux, uy, c, eps[j]);
    num[j] = pm.slab_mass_blocks(ux, uy, c, eps[j], xb.first, xb.second, yb.first, yb.second);
  }
  return fold_ratios(eps, num, den, pm.resolution, params.guard);
}

MassEstimate conditional_mass_recursion(const Ifs& f, const DiscreteMeasure& mu,
                                        const Eigen::VectorXd& x, const Eigen::MatrixXd& h,
                                        const Subspace& v, int k, const LadderParams& params) {
  if (k < 0) throw slice_error("cylinder depth must be nonnegative");
  DensityProfile p0 = f_estimate(mu, x, h, v, params);
  require_usable(p0, "base-point");

  Word w = code_of_point(f, x, k);
  Eigen::VectorXd xk = x;
  Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(f.ambient, f.ambient);
  for (uint32_t sym : w) {
    xk = f.maps[sym].invert(xk);
    rot = rot * f.maps[sym].rotation;
  }
  Eigen::MatrixXd hk = w.empty() ? h : keep_orthogonal(rot.transpose() * h);
  DensityProfile pk = f_estimate(mu, xk, hk, v, params);
  require_usable(pk, "zoomed");

  double rw = word_ratio(f, w);
  double sm = f.dimension - v.dim();
  MassEstimate est;
  est.value = std::pow(rw, sm) * (pk.theta_lower_hat / p0.theta_lower_hat);
  int lvl = profile_used_level(p0);
  est.used_level = lvl;
  est.eps = p0.eps[size_t(lvl)];
  // window spreads at both ends, propagated through the ratio
  est.variation =
      est.value * ((p0.theta_upper_hat - p0.theta_lower_hat) / p0.theta_lower_hat +
                   (pk.theta_upper_hat - pk.theta_lower_hat) / pk.theta_lower_hat);
  return est;
}

SliceMeasure slice_measure_direct(const DiscreteMeasure& mu, const Eigen::VectorXd& x,
                                  const Subspace& v, int depth, const LadderParams& params) {
  if (depth < 0) throw slice_error("tree depth must be nonnegative");
  SliceMeasure sm;
  sm.base_x = x;
  sm.subspace = v;
  sm.method = MassMethod::direct;
  sm.branching = mu.branching;
  for (int lvl = 0; lvl <= depth; ++lvl) {
    uint64_t words = 1;
    for (int i = 0; i < lvl; ++i) words *= mu.branching == 0 ? 1 : mu.branching;
    for (uint64_t wi = 0; wi < words; ++wi) {
      Word w = index_word(wi, lvl, mu.branching == 0 ? 1 : mu.branching);
      MassEstimate est = conditional_mass_direct(mu, x, v, w, params);
      sm.entries.push_back({std::move(w), est.value, est.variation});
    }
  }
  return sm;
}

SliceMeasure slice_measure_recursion(const Ifs& f, const DiscreteMeasure& mu,
                                     const Eigen::VectorXd& x, const Eigen::MatrixXd& h,
                                     const Subspace& v, int depth, const LadderParams& params) {
  if (depth < 0) throw slice_error("chain depth must be nonnegative");
  SliceMeasure sm;
  sm.base_x = x;
  sm.subspace = v;
  sm.method = MassMethod::recursion;
  sm.branching = f.branching();
  for (int k = 0; k <= depth; ++k) {
    MassEstimate est = conditional_mass_recursion(f, mu, x, h, v, k, params);
    sm.entries.push_back({code_of_point(f, x, k), est.value, est.variation});
  }
  return sm;
}

void write_slice_csv(const SliceMeasure& sm, const std::string& path) {
  CsvWriter csv(path, {"word", "mass", "method", "variation"});
  const char* method = sm.method == MassMethod::direct ? "direct" : "recursion";
  for (const auto& e : sm.entries) {
    csv.field(word_string(e.word, sm.branching))
        .field(e.mass)
        .field(method)
        .field(e.variation);
    csv.end_row();
  }
}

namespace {

void finish_extremes(OrbitTrace& tr) {
  tr.running_max = 0;
  tr.running_min = 0;
  bool seen = false;
  for (const auto& st : tr.steps) {
    if (!st.ok) continue;
    if (!seen) {
      tr.running_max = tr.running_min = st.f_lower;
      seen = true;
    } else {
      tr.running_max = std::max(tr.running_max, st.f_lower);
      tr.running_min = std::min(tr.running_min, st.f_lower);
    }
  }
}

}  // namespace

OrbitTrace density_trace(const Ifs& f, const DiscreteMeasure& mu, const SkewState& start,
                         const Subspace& v, int steps, const LadderParams& params) {
  if (steps < 1) throw slice_error("trace needs at least one step");
  OrbitTrace tr;
  Eigen::VectorXd x = start.x;
  Eigen::MatrixXd h = start.h;
  double rw = 1.0;
  Word word;
  for (int k = 0; k < steps; ++k) {
    TraceStep st;
    st.k = k;
    st.coords = x;
    st.word = word_string(word, f.branching());
    st.scale = rw;
    try {
      DensityProfile p = f_estimate(mu, x, h, v, params);
      if (!(p.theta_lower_hat > 0) || !std::isfinite(p.theta_upper_hat)) {
        st.note = "vanishing density estimate";
        ++tr.failures;
      } else {
        st.ok = true;
        st.f_lower = p.theta_lower_hat;
        st.f_upper = p.theta_upper_hat;
      }
    } catch (const std::exception& e) {
      st.note = e.what();
      ++tr.failures;
    }
    tr.steps.push_back(std::move(st));
    if (k + 1 == steps) break;
    uint32_t sym;
    try {
      sym = code_of_point(f, x, 1)[0];
    } catch (const std::exception& e) {
      TraceStep end;
      end.k = k + 1;
      end.coords = x;
      end.note = std::string("orbit ended: ") + e.what();
      ++tr.failures;
      tr.steps.push_back(std::move(end));
      break;
    }
    x = f.maps[sym].invert(x);
    h = keep_orthogonal(f.maps[sym].rotation.transpose() * h);
    rw *= f.maps[sym].ratio;
    word.push_back(sym);
  }
  finish_extremes(tr);
  return tr;
}

OrbitTrace product_density_trace(const ProductSystem& sys, const ProductMeasure& pm,
                                 std::mt19937_64& rng, int steps, const LadderParams& params) {
  if (steps < 1) throw slice_error("trace needs at least one step");
  OrbitTrace tr;
  ProductOrbit orbit(sys, rng);
  int l = 0;
  Word xw, yw;
  for (int k = 0; k < steps; ++k) {
    ProductState s = orbit.state();
    TraceStep st;
    st.k = k;
    st.coords = Eigen::Vector3d(s.x, s.y, s.t);
    st.word = word_string(xw, sys.fa.branching()) + "|" + word_string(yw, sys.fb.branching());
    st.scale = std::pow(2.0, -double(l + k)) * std::pow(sys.b, -double(k));
    try {
      DensityProfile p = product_direction_profile(pm, Eigen::Vector2d(s.x, s.y),
                                                   direction_subspace(sys, s.t), params);
      if (!(p.theta_lower_hat > 0) || !std::isfinite(p.theta_upper_hat)) {
        st.note = "vanishing density estimate";
        ++tr.failures;
      } else {
        st.ok = true;
        st.f_lower = p.theta_lower_hat;
        st.f_upper = p.theta_upper_hat;
      }
    } catch (const std::exception& e) {
      st.note = e.what();
      ++tr.failures;
    }
    tr.steps.push_back(std::move(st));
    bool wrap = orbit.t() + sys.alpha >= 1.0;
    yw.push_back(orbit.y_word(1)[0]);
    if (wrap) {
      xw.push_back(orbit.x_word(1)[0]);
      ++l;
    }
    orbit.advance();
  }
  finish_extremes(tr);
  return tr;
}

OrbitTrace skew_density_trace(const SkewSystem& sys, const DiscreteMeasure& mu, const Subspace& v,
                              std::mt19937_64& rng, int steps, const LadderParams& params) {
  if (steps < 1) throw slice_error("trace needs at least one step");
  OrbitTrace tr;
  SkewOrbit orbit(sys, rng);
  double rw = 1.0;
  Word word;
  for (int k = 0; k < steps; ++k) {
    SkewState s = orbit.state();
    TraceStep st;
    st.k = k;
    st.coords = s.x;
    st.word = word_string(word, sys.f.branching());
    st.scale = rw;
    try {
      DensityProfile p = f_estimate(mu, s.x, s.h, v, params);
      if (!(p.theta_lower_hat > 0) || !std::isfinite(p.theta_upper_hat)) {
        st.note = "vanishing density estimate";
        ++tr.failures;
      } else {
        st.ok = true;
        st.f_lower = p.theta_lower_hat;
        st.f_upper = p.theta_upper_hat;
      }
    } catch (const std::exception& e) {
      st.note = e.what();
      ++tr.failures;
    }
    tr.steps.push_back(std::move(st));
    if (k + 1 == steps) break;
    uint32_t sym = orbit.word(1)[0];
    rw *= sys.f.maps[sym].ratio;
    word.push_back(sym);
    orbit.advance();
  }
  finish_extremes(tr);
  return tr;
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::h_positive:
      return "H-positive-evidence";
    case Verdict::h_zero:
      return "H-zero-evidence";
    case Verdict::p_infinite:
      return "P-infinite-evidence";
    default:
      return "inconclusive";
  }
}

Classification classify(const OrbitTrace& trace, const ClassifyParams& params) {
  std::vector<double> f;
  for (const auto& st : trace.steps)
    if (st.ok) f.push_back(st.f_lower);
  if (static_cast<int>(f.size()) < params.min_steps)
    throw slice_error("trace too short to classify");

  std::vector<double> sorted = f;
  std::sort(sorted.begin(), sorted.end());
  size_t n = sorted.size();
  double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  Classification cl;
  cl.median = median;
  cl.max_value = sorted.back();
  cl.min_value = sorted.front();

  // a trend must beat the earlier extreme by a margin: bare running records
  // keep appearing at harmonic rate even for a stationary sequence
  size_t cutoff = f.size() - f.size() / 3;
  double early_max = f[0], early_min = f[0];
  for (size_t i = 1; i < cutoff; ++i) {
    early_max = std::max(early_max, f[i]);
    early_min = std::min(early_min, f[i]);
  }
  cl.max_growing = cl.max_value > (1.0 + params.trend_margin) * early_max;
  cl.min_falling = cl.min_value < (1.0 - params.trend_margin) * early_min;

  bool blown = cl.max_value > params.blowup * median;
  bool collapsed = cl.min_value * params.blowup < median;
  if (blown && cl.max_growing)
    cl.verdict = Verdict::h_zero;
  else if (collapsed && cl.min_falling)
    cl.verdict = Verdict::p_infinite;
  else if (!cl.max_growing && !cl.min_falling)
    cl.verdict = Verdict::h_positive;
  else
    cl.verdict = Verdict::inconclusive;

  cl.note = "max/median=" + csv_double(median > 0 ? cl.max_value / median : 0.0) +
            (cl.max_growing ? " growing" : " plateau") +
            "; median/min=" + csv_double(cl.min_value > 0 ? median / cl.min_value : 0.0) +
            (cl.min_falling ? " falling" : " plateau");
  return cl;
}

CylinderBound product_cylinder_lower_bound(const ProductSystem& sys, const ProductMeasure& pm,
                                           const Eigen::Vector2d& z, double t0, int k,
                                           const LadderParams& params) {
  if (k < 0) throw slice_error("cylinder depth must be nonnegative");
  if (!(t0 >= 0.0) || !(t0 < 1.0)) throw slice_error("t0 must lie in [0,1)");

  DensityProfile p0 =
      product_direction_profile(pm, z, direction_subspace(sys, t0), params);
  require_usable(p0, "base-point");

  ProductState sk = product_power(sys, {z(0), z(1), t0}, k);
  int l = product_wraps(sys, t0, k);
  DensityProfile pk = product_direction_profile(pm, Eigen::Vector2d(sk.x, sk.y),
                                                direction_subspace(sys, sk.t), params);
  require_usable(pk, "zoomed");

  CylinderBound cb;
  cb.l = l;
  cb.lower = (1.0 / p0.theta_lower_hat) * (sys.a / 2.0) * std::pow(2.0, -double(l + k)) *
             std::pow(sys.b, -double(k)) * pk.theta_lower_hat;

  Word wx = code_of_point(sys.fa, vec1(z(0)), l);
  Word wy = code_of_point(sys.fb, vec1(z(1)), k);
  cb.direct_report = conditional_mass_direct(pm, z, direction_subspace(sys, t0), wx, wy, params);
  cb.direct = cb.direct_report.value;
  cb.slack = 2.0 * cb.direct_report.variation + 0.25 * cb.lower;
  cb.holds = cb.direct >= cb.lower - cb.slack;
  return cb;
}

BoxCountFit slice_box_dimension(const Ifs& f, const Eigen::VectorXd& x, const Subspace& v,
                                int j_min, int j_max) {
  if (j_min < 1 || j_max < j_min) throw slice_error("bad scale range");
  if (j_max - j_min + 1 < 4) throw slice_error("the fit needs at least four scales");
  if (v.ambient() != f.ambient || x.size() != f.ambient)
    throw slice_error("system, point and subspace dimensions disagree");

  const Eigen::MatrixXd pt = v.basis_perp.transpose();
  const Eigen::VectorXd px = pt * x;
  struct Node {
    Eigen::MatrixXd lin;
    Eigen::VectorXd tr;
    double ratio;
  };

  BoxCountFit fit;
  for (int j = j_min; j <= j_max; ++j) {
    double eps = f.radius * std::pow(2.0, -j);
    int64_t count = 0;
    std::vector<Node> stack;
    stack.push_back({Eigen::MatrixXd::Identity(f.ambient, f.ambient),
                     Eigen::VectorXd::Zero(f.ambient), 1.0});
    while (!stack.empty()) {
      Node nd = std::move(stack.back());
      stack.pop_back();
      double rho = nd.ratio * f.radius;
      double d = (pt * (nd.lin * f.center + nd.tr) - px).norm();
      if (rho <= eps) {
        if (d <= 2.0 * rho) ++count;
        continue;
      }
      if (d > rho + 2.0 * eps) continue;  // no descendant cell can reach the slab
      for (const auto& m : f.maps)
        stack.push_back(
            {nd.lin * (m.ratio * m.rotation), nd.lin * m.translation + nd.tr, nd.ratio * m.ratio});
    }
    if (count == 0) throw slice_error("empty slice: no cell meets the slab at a requested scale");
    fit.eps.push_back(eps);
    fit.counts.push_back(count);
  }
  fit.slope = fit_slope(fit.eps, fit.counts);
  return fit;
}

BoxCountFit product_slice_box_dimension(const Ifs& fa, const Ifs& fb, const Eigen::Vector2d& z,
                                        const Subspace& v, int j_min, int j_max) {
  if (j_min < 1 || j_max < j_min) throw slice_error("bad scale range");
  if (j_max - j_min + 1 < 4) throw slice_error("the fit needs at least four scales");
  if (v.ambient() != 2 || v.dim() != 1) throw slice_error("product slices need a line in the plane");

  double ux = v.basis_perp(0, 0), uy = v.basis_perp(1, 0);
  double c = ux * z(0) + uy * z(1);
  double scale0 = std::hypot(fa.radius, fb.radius);

  BoxCountFit fit;
  for (int j = j_min; j <= j_max; ++j) {
    double eps = scale0 * std::pow(2.0, -j);
    auto [xa, ha] = section_cells(fa, eps);
    auto [yb, hb] = section_cells(fb, eps);
    double margin = std::hypot(ha, hb) + std::abs(ux) * ha + std::abs(uy) * hb;
    int64_t count = 0;
    if (std::abs(uy) < 1e-12) {
      for (double xc : xa)
        if (std::abs(ux * xc - c) <= margin) count += static_cast<int64_t>(yb.size());
    } else {
      for (double xc : xa) {
        double lo = (c - ux * xc - margin) / uy;
        double hi = (c - ux * xc + margin) / uy;
        if (lo > hi) std::swap(lo, hi);
        auto b = std::lower_bound(yb.begin(), yb.end(), lo);
        auto e = std::upper_bound(yb.begin(), yb.end(), hi);
        count += e - b;
      }
    }
    if (count == 0) throw slice_error("empty slice: no cell meets the slab at a requested scale");
    fit.eps.push_back(eps);
    fit.counts.push_back(count);
  }
  fit.slope = fit_slope(fit.eps, fit.counts);
  return fit;
}

}  // namespace fracslice
