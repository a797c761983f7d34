#include "fracslice/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fracslice {

namespace {

// Largest j with d <= eps[j] for a descending ladder, -1 if none.  The frexp
// guess lands within one step; the comparisons settle ties exactly the way a
// per-level scan would.
int ladder_bin(double d, const std::vector<double>& eps) {
  int levels = static_cast<int>(eps.size());
  if (d > eps[0]) return -1;
  if (d <= eps[levels - 1]) return levels - 1;
  int e = 0;
  std::frexp(eps[0] / d, &e);
  int g = std::clamp(e - 1, 0, levels - 1);
  while (g + 1 < levels && d <= eps[g + 1]) ++g;
  while (g >= 0 && d > eps[g]) --g;
  return g;
}

std::vector<double> ladder_scales(double eps0, int levels) {
  if (!(eps0 > 0) || levels < 1) throw measure_error("scale ladder needs eps0 > 0 and levels >= 1");
  std::vector<double> eps(levels);
  eps[0] = eps0;
  for (int j = 1; j < levels; ++j) eps[j] = 0.5 * eps[j - 1];
  return eps;
}

DensityProfile finalize_profile(std::vector<double> eps, const std::vector<double>& mass,
                                int exponent, double resolution, double guard) {
  DensityProfile p;
  p.exponent = exponent;
  p.ratio.resize(eps.size());
  p.in_window.resize(eps.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (size_t j = 0; j < eps.size(); ++j) {
    p.ratio[j] = mass[j] / std::pow(2.0 * eps[j], exponent);
    p.in_window[j] = eps[j] >= guard * resolution ? 1 : 0;
    if (p.in_window[j]) {
      lo = std::min(lo, p.ratio[j]);
      hi = std::max(hi, p.ratio[j]);
    }
  }
  if (!(lo <= hi)) {
    // every scale sits below the guard; fall back to the coarsest one
    lo = hi = p.ratio[0];
  }
  p.theta_lower_hat = lo;
  p.theta_upper_hat = hi;
  p.eps = std::move(eps);
  return p;
}

double auto_extent_eps0(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double resolution,
                        double guard) {
  double extent = 0;
  for (int i = 0; i < lo.size(); ++i) extent = std::max(extent, hi(i) - lo(i));
  if (extent > 0) return extent / 4.0;
  return std::max(resolution * guard * 4.0, 1e-9);
}

}  // namespace

DiscreteMeasure attractor_atoms(const Ifs& f, int depth, uint64_t cap) {
  if (depth < 0) throw measure_error("atom depth must be nonnegative");
  uint32_t branching = f.branching();
  uint64_t count = 1;
  for (int l = 0; l < depth; ++l) {
    if (count > cap / branching) throw measure_error("atom count exceeds the cap");
    count *= branching;
  }
  int n = f.ambient;

  DiscreteMeasure mu;
  mu.points.resize(n, static_cast<int64_t>(count));
  mu.weights.resize(static_cast<int64_t>(count));
  mu.branching = branching;
  mu.tree_depth = depth;
  double rmax = 0;
  for (const auto& m : f.maps) rmax = std::max(rmax, m.ratio);
  mu.resolution = f.diameter * std::pow(rmax, depth);

  // child linear parts, offsets, and weights
  std::vector<Eigen::MatrixXd> lin(branching);
  std::vector<Eigen::VectorXd> off(branching);
  for (uint32_t b = 0; b < branching; ++b) {
    lin[b] = f.maps[b].ratio * f.maps[b].rotation;
    off[b] = f.maps[b].translation;
  }

  std::vector<Eigen::MatrixXd> ms(depth + 1);
  std::vector<Eigen::VectorXd> ts(depth + 1);
  std::vector<double> ws(depth + 1);
  for (int l = 0; l <= depth; ++l) {
    ms[l].resize(n, n);
    ts[l].resize(n);
  }
  ms[0].setIdentity();
  ts[0].setZero();
  ws[0] = 1.0;

  Eigen::VectorXd bmin = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  Eigen::VectorXd bmax = -bmin;
  Eigen::VectorXd pt(n);
  int64_t idx = 0;

  auto rec = [&](auto&& self, int level) -> void {
    if (level == depth) {
      pt.noalias() = ms[level] * f.anchor;
      pt += ts[level];
      mu.points.col(idx) = pt;
      mu.weights(idx) = ws[level];
      bmin = bmin.cwiseMin(pt);
      bmax = bmax.cwiseMax(pt);
      ++idx;
      return;
    }
    for (uint32_t b = 0; b < branching; ++b) {
      ms[level + 1].noalias() = ms[level] * lin[b];
      ts[level + 1].noalias() = ms[level] * off[b];
      ts[level + 1] += ts[level];
      ws[level + 1] = ws[level] * f.weights[b];
      self(self, level + 1);
    }
  };
  rec(rec, 0);

  mu.bbox_min = bmin;
  mu.bbox_max = bmax;
  return mu;
}

std::pair<int64_t, int64_t> cylinder_block(const DiscreteMeasure& mu, const Word& w) {
  if (mu.branching == 0) throw measure_error("measure carries no cylinder tree");
  if (static_cast<int>(w.size()) > mu.tree_depth)
    throw measure_error("word is deeper than the atom tree");
  for (uint32_t s : w)
    if (s >= mu.branching) throw measure_error("word symbol out of range");
  uint64_t stride = 1;
  for (int l = static_cast<int>(w.size()); l < mu.tree_depth; ++l) stride *= mu.branching;
  uint64_t begin = word_index(w, mu.branching) * stride;
  return {static_cast<int64_t>(begin), static_cast<int64_t>(begin + stride)};
}

DiscreteMeasure pushforward_project(const DiscreteMeasure& mu, const Subspace& v) {
  if (v.basis_perp.rows() != mu.ambient())
    throw measure_error("subspace ambient dimension mismatch");
  DiscreteMeasure nu;
  nu.points.noalias() = v.basis_perp.transpose() * mu.points;
  nu.weights = mu.weights;
  nu.resolution = mu.resolution;
  nu.branching = mu.branching;
  nu.tree_depth = mu.tree_depth;
  nu.bbox_min = nu.points.rowwise().minCoeff();
  nu.bbox_max = nu.points.rowwise().maxCoeff();
  return nu;
}

double ball_mass(const DiscreteMeasure& mu, const Eigen::VectorXd& center, double radius) {
  if (center.size() != mu.ambient()) throw measure_error("ball center dimension mismatch");
  double mass = 0;
  for (int64_t i = 0; i < mu.size(); ++i)
    if ((mu.points.col(i) - center).norm() <= radius) mass += mu.weights(i);
  return mass;
}

DensityProfile density_profile(const DiscreteMeasure& nu, const Eigen::VectorXd& x, int exponent,
                               const LadderParams& params) {
  if (x.size() != nu.ambient()) throw measure_error("profile point dimension mismatch");
  double eps0 = params.eps0;
  if (eps0 <= 0) {
    Eigen::VectorXd lo = nu.bbox_min.size() ? nu.bbox_min : Eigen::VectorXd(nu.points.rowwise().minCoeff());
    Eigen::VectorXd hi = nu.bbox_max.size() ? nu.bbox_max : Eigen::VectorXd(nu.points.rowwise().maxCoeff());
    eps0 = auto_extent_eps0(lo, hi, nu.resolution, params.guard);
  }
  std::vector<double> eps = ladder_scales(eps0, params.levels);
  std::vector<double> bins(eps.size(), 0.0);
  for (int64_t i = 0; i < nu.size(); ++i) {
    double d = (nu.points.col(i) - x).norm();
    int j = ladder_bin(d, eps);
    if (j >= 0) bins[j] += nu.weights(i);
  }
  std::vector<double> mass(eps.size());
  double acc = 0;
  for (int j = static_cast<int>(eps.size()) - 1; j >= 0; --j) {
    acc += bins[j];
    mass[j] = acc;
  }
  return finalize_profile(std::move(eps), mass, exponent, nu.resolution, params.guard);
}

DensityProfile f_estimate(const DiscreteMeasure& mu, const Eigen::VectorXd& x,
                          const Eigen::MatrixXd& h, const Subspace& v, const LadderParams& params) {
  Subspace hv = rotate_subspace(h, v);
  DiscreteMeasure nu = pushforward_project(mu, hv);
  int m = static_cast<int>(hv.basis_perp.cols());
  return density_profile(nu, project_coords(hv, x), m, params);
}

std::vector<std::vector<double>> projected_ladder_masses(const DiscreteMeasure& mu,
                                                         const Eigen::MatrixXd& dirs,
                                                         const Eigen::MatrixXd& centers,
                                                         const std::vector<double>& eps) {
  if (dirs.rows() != mu.ambient()) throw measure_error("projection dimension mismatch");
  if (centers.rows() != dirs.cols()) throw measure_error("center dimension mismatch");
  if (eps.empty()) throw measure_error("empty scale ladder");
  for (size_t j = 1; j < eps.size(); ++j)
    if (!(eps[j] < eps[j - 1])) throw measure_error("scale ladder must be strictly decreasing");

  int n = mu.ambient();
  int m = static_cast<int>(dirs.cols());
  int nc = static_cast<int>(centers.cols());
  int levels = static_cast<int>(eps.size());
  std::vector<std::vector<double>> bins(nc, std::vector<double>(levels, 0.0));

  const double* pts = mu.points.data();
  const double* wts = mu.weights.data();
  const double* ctr = centers.data();
  std::vector<double> y(m);
  for (int64_t i = 0; i < mu.size(); ++i) {
    const double* p = pts + i * n;
    for (int a = 0; a < m; ++a) {
      double s = 0;
      for (int r = 0; r < n; ++r) s += dirs(r, a) * p[r];
      y[a] = s;
    }
    for (int c = 0; c < nc; ++c) {
      double d2 = 0;
      for (int a = 0; a < m; ++a) {
        double t = y[a] - ctr[c * m + a];
        d2 += t * t;
      }
      int j = ladder_bin(std::sqrt(d2), eps);
      if (j >= 0) bins[c][j] += wts[i];
    }
  }
  for (int c = 0; c < nc; ++c) {
    double acc = 0;
    for (int j = levels - 1; j >= 0; --j) {
      acc += bins[c][j];
      bins[c][j] = acc;
    }
  }
  return bins;
}

double LineMeasure::interval_mass(double lo, double hi) const {
  return interval_mass(lo, hi, 0, size());
}

double LineMeasure::interval_mass(double lo, double hi, int64_t block_begin,
                                  int64_t block_end) const {
  if (block_begin < 0 || block_end > size() || block_begin > block_end)
    throw measure_error("atom block out of range");
  if (!(hi >= lo)) return 0;
  auto first = position.begin() + block_begin;
  auto last = position.begin() + block_end;
  int64_t i0 = std::lower_bound(first, last, lo) - position.begin();
  int64_t i1 = std::upper_bound(first, last, hi) - position.begin();
  return prefix[i1] - prefix[i0];
}

LineMeasure line_measure(const DiscreteMeasure& mu_1d) {
  if (mu_1d.ambient() != 1) throw measure_error("line measure needs one-dimensional atoms");
  int64_t count = mu_1d.size();
  LineMeasure lm;
  lm.resolution = mu_1d.resolution;
  lm.branching = mu_1d.branching;
  lm.tree_depth = mu_1d.tree_depth;
  lm.position.resize(count);
  bool sorted = true;
  for (int64_t i = 0; i < count; ++i) {
    lm.position[i] = mu_1d.points(0, i);
    if (i > 0 && lm.position[i] < lm.position[i - 1]) sorted = false;
  }
  lm.prefix.assign(count + 1, 0.0);
  if (sorted) {
    for (int64_t i = 0; i < count; ++i) lm.prefix[i + 1] = lm.prefix[i] + mu_1d.weights(i);
  } else {
    // sorting loses the tree addressing, so cylinder blocks are disabled
    std::vector<int64_t> order(count);
    for (int64_t i = 0; i < count; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int64_t a, int64_t b) { return mu_1d.points(0, a) < mu_1d.points(0, b); });
    for (int64_t i = 0; i < count; ++i) {
      lm.position[i] = mu_1d.points(0, order[i]);
      lm.prefix[i + 1] = lm.prefix[i] + mu_1d.weights(order[i]);
    }
    lm.branching = 0;
    lm.tree_depth = 0;
  }
  return lm;
}

double ProductMeasure::ball_mass(double zx, double zy, double r) const {
  if (!(r >= 0)) return 0;
  int64_t i0 = std::lower_bound(x.position.begin(), x.position.end(), zx - r) - x.position.begin();
  int64_t i1 = std::upper_bound(x.position.begin(), x.position.end(), zx + r) - x.position.begin();
  double mass = 0;
  for (int64_t i = i0; i < i1; ++i) {
    double dx = x.position[i] - zx;
    double t = r * r - dx * dx;
    if (t < 0) continue;
    double w = x.prefix[i + 1] - x.prefix[i];
    if (w == 0) continue;
    double chord = std::sqrt(t);
    mass += w * y.interval_mass(zy - chord, zy + chord);
  }
  return mass;
}

double ProductMeasure::slab_mass(double dir_x, double dir_y, double c, double eps) const {
  return slab_mass_blocks(dir_x, dir_y, c, eps, 0, x.size(), 0, y.size());
}

double ProductMeasure::slab_mass_blocks(double dir_x, double dir_y, double c, double eps,
                                        int64_t xb, int64_t xe, int64_t yb, int64_t ye) const {
  if (xb < 0 || xe > x.size() || xb > xe || yb < 0 || ye > y.size() || yb > ye)
    throw measure_error("atom block out of range");
  if (std::abs(dir_x) < 1e-300 && std::abs(dir_y) < 1e-300)
    throw measure_error("slab direction is zero");
  double mass = 0;
  if (std::abs(dir_y) >= std::abs(dir_x)) {
    for (int64_t i = xb; i < xe; ++i) {
      double w = x.prefix[i + 1] - x.prefix[i];
      if (w == 0) continue;
      double lo = (c - eps - dir_x * x.position[i]) / dir_y;
      double hi = (c + eps - dir_x * x.position[i]) / dir_y;
      if (dir_y < 0) std::swap(lo, hi);
      mass += w * y.interval_mass(lo, hi, yb, ye);
    }
  } else {
    for (int64_t j = yb; j < ye; ++j) {
      double w = y.prefix[j + 1] - y.prefix[j];
      if (w == 0) continue;
      double lo = (c - eps - dir_y * y.position[j]) / dir_x;
      double hi = (c + eps - dir_y * y.position[j]) / dir_x;
      if (dir_x < 0) std::swap(lo, hi);
      mass += w * x.interval_mass(lo, hi, xb, xe);
    }
  }
  return mass;
}

double ProductMeasure::block_mass(int64_t xb, int64_t xe, int64_t yb, int64_t ye) const {
  if (xb < 0 || xe > x.size() || xb > xe || yb < 0 || ye > y.size() || yb > ye)
    throw measure_error("atom block out of range");
  return (x.prefix[xe] - x.prefix[xb]) * (y.prefix[ye] - y.prefix[yb]);
}

ProductMeasure product_cantor_measure(const Ifs& fa, int depth_a, const Ifs& fb, int depth_b) {
  if (fa.ambient != 1 || fb.ambient != 1)
    throw measure_error("product factors must be one-dimensional");
  ProductMeasure pm;
  pm.x = line_measure(attractor_atoms(fa, depth_a));
  pm.y = line_measure(attractor_atoms(fb, depth_b));
  pm.resolution = std::hypot(pm.x.resolution, pm.y.resolution);
  return pm;
}

DiscreteMeasure product_measure_flat(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                     uint64_t cap) {
  uint64_t na = static_cast<uint64_t>(a.size());
  uint64_t nb = static_cast<uint64_t>(b.size());
  if (nb != 0 && na > cap / nb) throw measure_error("product atom count exceeds the cap");
  DiscreteMeasure mu;
  int da = a.ambient(), db = b.ambient();
  mu.points.resize(da + db, static_cast<int64_t>(na * nb));
  mu.weights.resize(static_cast<int64_t>(na * nb));
  for (uint64_t i = 0; i < na; ++i)
    for (uint64_t j = 0; j < nb; ++j) {
      int64_t col = static_cast<int64_t>(i * nb + j);
      mu.points.col(col).head(da) = a.points.col(static_cast<int64_t>(i));
      mu.points.col(col).tail(db) = b.points.col(static_cast<int64_t>(j));
      mu.weights(col) = a.weights(static_cast<int64_t>(i)) * b.weights(static_cast<int64_t>(j));
    }
  mu.resolution = std::hypot(a.resolution, b.resolution);
  mu.bbox_min.resize(da + db);
  mu.bbox_max.resize(da + db);
  mu.bbox_min << a.bbox_min, b.bbox_min;
  mu.bbox_max << a.bbox_max, b.bbox_max;
  return mu;
}

DensityProfile product_direction_profile(const ProductMeasure& mu, const Eigen::Vector2d& z,
                                         const Subspace& v, const LadderParams& params) {
  if (v.basis_perp.rows() != 2 || v.basis_perp.cols() != 1)
    throw measure_error("product profiles need a line target in the plane");
  if (mu.x.size() == 0 || mu.y.size() == 0) throw measure_error("empty product factor");
  double ux = v.basis_perp(0, 0), uy = v.basis_perp(1, 0);
  double c = ux * z(0) + uy * z(1);
  double eps0 = params.eps0;
  if (eps0 <= 0) {
    double extent = std::abs(ux) * (mu.x.position.back() - mu.x.position.front()) +
                    std::abs(uy) * (mu.y.position.back() - mu.y.position.front());
    eps0 = extent > 0 ? extent / 4.0 : std::max(mu.resolution * params.guard * 4.0, 1e-9);
  }
  std::vector<double> eps = ladder_scales(eps0, params.levels);
  std::vector<double> mass(eps.size());
  for (size_t j = 0; j < eps.size(); ++j) mass[j] = mu.slab_mass(ux, uy, c, eps[j]);
  return finalize_profile(std::move(eps), mass, 1, mu.resolution, params.guard);
}

FrostmanReport frostman_check(const ProductMeasure& mu, const Ifs& fa, const Ifs& fb, int k_max,
                              int samples, std::mt19937_64& rng) {
  if (fa.ambient != 1 || fb.ambient != 1)
    throw measure_error("ball-growth check needs one-dimensional factors");
  double a = fa.min_ratio;
  double b = fb.min_ratio;
  if (a > b) throw measure_error("x-factor ratio must not exceed y-factor ratio");
  double delta = 1.0 - 2.0 * b;
  if (delta <= 0) throw measure_error("y-factor ratio must stay below one half");
  double dsum = fa.dimension + fb.dimension;

  FrostmanReport rep;
  rep.rows.reserve(static_cast<size_t>(samples) * (k_max + 1));
  for (int s = 0; s < samples; ++s) {
    double zx = sample_attractor(fa, rng)(0);
    double zy = sample_attractor(fb, rng)(0);
    for (int k = 0; k <= k_max; ++k) {
      FrostmanRow row;
      row.zx = zx;
      row.zy = zy;
      row.k = k;
      row.radius = delta * std::pow(a, k);
      row.mass = mu.ball_mass(zx, zy, row.radius);
      double k_eff = std::floor(std::log((row.radius + mu.resolution) / delta) / std::log(a));
      k_eff = std::max(k_eff, 0.0);
      row.bound = 2.0 * std::pow(a, k_eff * dsum);
      row.ratio = row.mass / row.bound;
      rep.max_ratio = std::max(rep.max_ratio, row.ratio);
      if (row.ratio > 1.0 + 1e-9) ++rep.violations;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

}  // namespace fracslice
