#include "fracslice/dynamics.hpp"

#include <cmath>

namespace fracslice {

namespace {

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

uint32_t first_symbol(const Ifs& f, const Eigen::VectorXd& x) {
  return code_of_point(f, x, 1)[0];
}

uint32_t draw_symbol(const Ifs& f, std::mt19937_64& rng) {
  double u = uniform_unit(rng);
  double acc = 0;
  for (size_t i = 0; i + 1 < f.weights.size(); ++i) {
    acc += f.weights[i];
    if (u < acc) return uint32_t(i);
  }
  return uint32_t(f.weights.size() - 1);
}

Word ring_word(const std::vector<uint32_t>& ring, size_t head, int depth) {
  if (depth < 0 || size_t(depth) > ring.size())
    throw dynamics_error("word depth exceeds the orbit window");
  Word w(static_cast<size_t>(depth));
  for (int i = 0; i < depth; ++i) w[size_t(i)] = ring[(head + size_t(i)) % ring.size()];
  return w;
}

}  // namespace

SkewSystem make_skew_system(const Ifs& f, size_t element_cap) {
  std::vector<Eigen::MatrixXd> gens;
  for (const auto& m : f.maps) gens.push_back(m.rotation);
  return {f, close_group(gens, kDedupeTol, element_cap)};
}

SkewState step_skew(const SkewSystem& sys, const SkewState& s) {
  uint32_t sym = first_symbol(sys.f, s.x);
  const SimilarityMap& m = sys.f.maps[sym];
  SkewState next;
  next.x = m.invert(s.x);
  next.h = keep_orthogonal(m.rotation.transpose() * s.h);
  return next;
}

SkewState skew_power(const SkewSystem& sys, const SkewState& s, int k) {
  if (k < 0) throw dynamics_error("power must be nonnegative");
  Word w = code_of_point(sys.f, s.x, k);
  SkewState next = s;
  // peel inverses off in word order; composing into one map first would
  // cancel catastrophically at small cylinder scales
  Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(sys.f.ambient, sys.f.ambient);
  for (uint32_t sym : w) {
    next.x = sys.f.maps[sym].invert(next.x);
    rot = rot * sys.f.maps[sym].rotation;
  }
  next.h = keep_orthogonal(rot.transpose() * s.h);
  return next;
}

SkewState sample_skew_state(const SkewSystem& sys, std::mt19937_64& rng, int depth) {
  return {sample_attractor(sys.f, rng, depth), haar_sample(sys.group, rng)};
}

SkewOrbit::SkewOrbit(const SkewSystem& sys, std::mt19937_64& rng, int window)
    : sys_(&sys), rng_(rng()) {
  if (window < 1) throw dynamics_error("orbit window must be positive");
  window_.resize(size_t(window));
  for (auto& sym : window_) sym = draw_symbol(sys.f, rng_);
  h_ = haar_sample(sys.group, rng_);
}

SkewState SkewOrbit::state() const {
  return {attractor_point(sys_->f, ring_word(window_, head_, int(window_.size()))), h_};
}

Word SkewOrbit::word(int depth) const { return ring_word(window_, head_, depth); }

void SkewOrbit::advance() {
  h_ = sys_->f.maps[window_[head_]].rotation.transpose() * h_;
  window_[head_] = draw_symbol(sys_->f, rng_);
  head_ = (head_ + 1) % window_.size();
  if (++steps_ % 64 == 0) h_ = keep_orthogonal(std::move(h_));
}

ProductOrbit::ProductOrbit(const ProductSystem& sys, std::mt19937_64& rng, int window)
    : sys_(&sys), rng_(rng()) {
  if (window < 1) throw dynamics_error("orbit window must be positive");
  xwin_.resize(size_t(window));
  ywin_.resize(size_t(window));
  for (auto& sym : xwin_) sym = draw_symbol(sys.fa, rng_);
  for (auto& sym : ywin_) sym = draw_symbol(sys.fb, rng_);
  t_ = uniform_unit(rng_);
}

ProductState ProductOrbit::state() const {
  ProductState s;
  s.x = attractor_point(sys_->fa, ring_word(xwin_, xhead_, int(xwin_.size())))(0);
  s.y = attractor_point(sys_->fb, ring_word(ywin_, yhead_, int(ywin_.size())))(0);
  s.t = t_;
  return s;
}

Word ProductOrbit::x_word(int depth) const { return ring_word(xwin_, xhead_, depth); }

Word ProductOrbit::y_word(int depth) const { return ring_word(ywin_, yhead_, depth); }

void ProductOrbit::advance() {
  bool wrap = t_ + sys_->alpha >= 1.0;
  t_ = wrap ? t_ + sys_->alpha - 1.0 : t_ + sys_->alpha;
  ywin_[yhead_] = draw_symbol(sys_->fb, rng_);
  yhead_ = (yhead_ + 1) % ywin_.size();
  if (wrap) {
    xwin_[xhead_] = draw_symbol(sys_->fa, rng_);
    xhead_ = (xhead_ + 1) % xwin_.size();
  }
}

ProductSystem make_product_system(const Ifs& fa, const Ifs& fb, double tau) {
  if (fa.ambient != 1 || fb.ambient != 1)
    throw dynamics_error("product factors must be one-dimensional");
  for (const auto& m : fa.maps)
    if (m.ratio != fa.min_ratio) throw dynamics_error("x factor must have one contraction ratio");
  for (const auto& m : fb.maps)
    if (m.ratio != fb.min_ratio) throw dynamics_error("y factor must have one contraction ratio");
  ProductSystem sys;
  sys.fa = fa;
  sys.fb = fb;
  sys.a = fa.min_ratio;
  sys.b = fb.min_ratio;
  if (!(sys.a < sys.b)) throw dynamics_error("factor ratios must satisfy a < b");
  if (!(sys.b < 0.5)) throw dynamics_error("factor ratios must stay below one half");
  if (!(tau > 0)) throw dynamics_error("direction scale tau must be positive");
  sys.tau = tau;
  sys.da = fa.dimension;
  sys.db = fb.dimension;
  sys.alpha = std::log(sys.b) / std::log(sys.a);
  sys.eta = sys.da + sys.db - 1.0;

  sys.rational_gap = 1.0;
  for (int q = 1; q <= 64; ++q) {
    double p = std::round(sys.alpha * q);
    double gap = std::abs(sys.alpha - p / q);
    if (gap < sys.rational_gap) {
      sys.rational_gap = gap;
      sys.rational_den = q;
    }
  }
  return sys;
}

ProductState step_product(const ProductSystem& sys, const ProductState& s) {
  ProductState next;
  bool wrap = s.t + sys.alpha >= 1.0;
  next.t = wrap ? s.t + sys.alpha - 1.0 : s.t + sys.alpha;
  uint32_t sy = first_symbol(sys.fb, vec1(s.y));
  next.y = sys.fb.maps[sy].invert(vec1(s.y))(0);
  if (wrap) {
    uint32_t sx = first_symbol(sys.fa, vec1(s.x));
    next.x = sys.fa.maps[sx].invert(vec1(s.x))(0);
  } else {
    next.x = s.x;
  }
  return next;
}

ProductState product_power(const ProductSystem& sys, const ProductState& s, int k) {
  if (k < 0) throw dynamics_error("power must be nonnegative");
  ProductState next = s;
  int l = 0;
  for (int i = 0; i < k; ++i) {
    bool wrap = next.t + sys.alpha >= 1.0;
    next.t = wrap ? next.t + sys.alpha - 1.0 : next.t + sys.alpha;
    if (wrap) ++l;
  }
  Word wy = code_of_point(sys.fb, vec1(s.y), k);
  double y = s.y;
  for (uint32_t sym : wy) y = sys.fb.maps[sym].invert(vec1(y))(0);
  next.y = y;
  Word wx = code_of_point(sys.fa, vec1(s.x), l);
  double x = s.x;
  for (uint32_t sym : wx) x = sys.fa.maps[sym].invert(vec1(x))(0);
  next.x = x;
  return next;
}

int product_wraps(const ProductSystem& sys, double t0, int k) {
  int l = 0;
  double t = t0;
  for (int i = 0; i < k; ++i) {
    if (t + sys.alpha >= 1.0) {
      t = t + sys.alpha - 1.0;
      ++l;
    } else {
      t += sys.alpha;
    }
  }
  return l;
}

ProductState sample_product_state(const ProductSystem& sys, std::mt19937_64& rng, int depth) {
  ProductState s;
  s.x = sample_attractor(sys.fa, rng, depth)(0);
  s.y = sample_attractor(sys.fb, rng, depth)(0);
  s.t = uniform_unit(rng);
  return s;
}

Subspace direction_subspace(const ProductSystem& sys, double t) {
  Eigen::MatrixXd dir(2, 1);
  dir << sys.tau * std::pow(sys.a, t), -1.0;
  return span_subspace(dir);
}

RenormCheck renormalize_direction(const ProductSystem& sys, double t0, int k) {
  if (k < 0) throw dynamics_error("power must be nonnegative");
  if (!(t0 >= 0.0) || !(t0 < 1.0)) throw dynamics_error("t0 must lie in [0,1)");
  RenormCheck rc;
  double t = t0;
  for (int i = 0; i < k; ++i) {
    if (t + sys.alpha >= 1.0) {
      t = t + sys.alpha - 1.0;
      ++rc.l;
    } else {
      t += sys.alpha;
    }
  }
  rc.t_k = t;
  // diag(a^-l, b^-k) V^{t0} scaled by b^k is (tau a^{t0 - l} b^k, -1); the
  // exponent stays in log space so large k cannot overflow
  double log_u =
      std::log(sys.tau) + (t0 - rc.l) * std::log(sys.a) + double(k) * std::log(sys.b);
  double u = std::exp(log_u);
  double w = sys.tau * std::pow(sys.a, rc.t_k);
  double cross = std::abs(u - w);  // |u*(-1) - (-1)*w| is the 2x2 cross term
  double norm_u = std::hypot(u, 1.0);
  double norm_w = std::hypot(w, 1.0);
  rc.residual = std::asin(std::min(1.0, cross / (norm_u * norm_w)));
  return rc;
}

namespace {

PreservationReport finalize_report(std::vector<double> counts, std::vector<double> expected,
                                   int64_t samples) {
  PreservationReport rep;
  rep.samples = samples;
  rep.expected = std::move(expected);
  rep.observed.resize(counts.size());
  rep.max_abs_gap = 0;
  for (size_t i = 0; i < counts.size(); ++i) {
    rep.observed[i] = counts[i] / double(samples);
    rep.max_abs_gap = std::max(rep.max_abs_gap, std::abs(rep.observed[i] - rep.expected[i]));
  }
  return rep;
}

}  // namespace

PreservationReport skew_preservation_check(const SkewSystem& sys, int depth, int n_orbits,
                                           int horizon, std::mt19937_64& rng) {
  if (!sys.group.finite) throw dynamics_error("occupation cells need a finite rotation closure");
  if (depth < 1 || n_orbits < 1 || horizon < 1) throw dynamics_error("bad occupation parameters");
  size_t words = 1;
  for (int i = 0; i < depth; ++i) words *= sys.f.branching();
  size_t cells = words * sys.group.order();

  std::vector<double> expected(cells, 0.0);
  for (size_t wi = 0; wi < words; ++wi) {
    Word w = index_word(wi, depth, sys.f.branching());
    double pw = 1.0;
    for (uint32_t sym : w) pw *= sys.f.weights[sym];
    for (size_t gi = 0; gi < sys.group.order(); ++gi)
      expected[wi * sys.group.order() + gi] = pw / double(sys.group.order());
  }

  std::vector<double> counts(cells, 0.0);
  for (int orbit = 0; orbit < n_orbits; ++orbit) {
    SkewOrbit o(sys, rng, std::max(40, depth));
    for (int step = 0; step < horizon; ++step) {
      size_t wi = word_index(o.word(depth), sys.f.branching());
      auto gi = sys.group.find(o.h());
      if (!gi) throw dynamics_error("group coordinate drifted outside the closure");
      counts[wi * sys.group.order() + *gi] += 1.0;
      o.advance();
    }
  }
  return finalize_report(std::move(counts), std::move(expected),
                         int64_t(n_orbits) * int64_t(horizon));
}

PreservationReport product_preservation_check(const ProductSystem& sys, int depth, int t_bins,
                                              int n_orbits, int horizon, std::mt19937_64& rng) {
  if (depth < 1 || t_bins < 1 || n_orbits < 1 || horizon < 1)
    throw dynamics_error("bad occupation parameters");
  size_t words = 1;
  for (int i = 0; i < depth; ++i) words *= sys.fb.branching();
  size_t cells = words * size_t(t_bins);

  std::vector<double> expected(cells, 0.0);
  for (size_t wi = 0; wi < words; ++wi) {
    Word w = index_word(wi, depth, sys.fb.branching());
    double pw = 1.0;
    for (uint32_t sym : w) pw *= sys.fb.weights[sym];
    for (int bin = 0; bin < t_bins; ++bin) expected[wi * t_bins + bin] = pw / double(t_bins);
  }

  std::vector<double> counts(cells, 0.0);
  for (int orbit = 0; orbit < n_orbits; ++orbit) {
    ProductOrbit o(sys, rng, std::max(40, depth));
    for (int step = 0; step < horizon; ++step) {
      size_t wi = word_index(o.y_word(depth), sys.fb.branching());
      int bin = std::min(t_bins - 1, int(o.t() * t_bins));
      counts[wi * t_bins + bin] += 1.0;
      o.advance();
    }
  }
  return finalize_report(std::move(counts), std::move(expected),
                         int64_t(n_orbits) * int64_t(horizon));
}

double birkhoff_average(const SkewSystem& sys, const std::function<double(const SkewState&)>& f,
                        std::mt19937_64& rng, int steps) {
  if (steps < 1) throw dynamics_error("average needs at least one step");
  SkewOrbit o(sys, rng);
  double acc = 0;
  for (int i = 0; i < steps; ++i) {
    acc += f(o.state());
    o.advance();
  }
  return acc / double(steps);
}

double birkhoff_average(const ProductSystem& sys,
                        const std::function<double(const ProductState&)>& f, std::mt19937_64& rng,
                        int steps) {
  if (steps < 1) throw dynamics_error("average needs at least one step");
  ProductOrbit o(sys, rng);
  double acc = 0;
  for (int i = 0; i < steps; ++i) {
    acc += f(o.state());
    o.advance();
  }
  return acc / double(steps);
}

}  // namespace fracslice
