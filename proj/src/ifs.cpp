#include "fracslice/ifs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

namespace fracslice {

namespace {

constexpr double kMoranResidual = 1e-13;
constexpr size_t kMaxMaps = 256;
constexpr uint64_t kGeometrySampleCap = 4096;

double integer_pow(double base, int e) {
  double r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

}  // namespace

std::string word_string(const Word& w) {
  if (w.empty()) return "-";
  std::string s;
  s.reserve(w.size());
  for (uint32_t sym : w) {
    if (sym > 9) {
      // wide alphabets fall back to dot-separated symbols
      std::string out;
      for (size_t i = 0; i < w.size(); ++i) {
        if (i) out += '.';
        out += std::to_string(w[i]);
      }
      return out;
    }
    s += static_cast<char>('0' + sym);
  }
  return s;
}

uint64_t word_index(const Word& w, uint32_t branching) {
  uint64_t idx = 0;
  for (uint32_t sym : w) {
    if (sym >= branching) throw ifs_error("word symbol out of range");
    idx = idx * branching + sym;
  }
  return idx;
}

Word index_word(uint64_t index, int depth, uint32_t branching) {
  Word w(depth);
  for (int i = depth - 1; i >= 0; --i) {
    w[i] = static_cast<uint32_t>(index % branching);
    index /= branching;
  }
  if (index != 0) throw ifs_error("index exceeds the word space at this depth");
  return w;
}

Eigen::VectorXd SimilarityMap::apply(const Eigen::VectorXd& x) const {
  return ratio * (rotation * x) + translation;
}

Eigen::VectorXd SimilarityMap::invert(const Eigen::VectorXd& x) const {
  return rotation.transpose() * (x - translation) / ratio;
}

Eigen::VectorXd SimilarityMap::fixed_point() const {
  int n = static_cast<int>(translation.size());
  return (Eigen::MatrixXd::Identity(n, n) - ratio * rotation).lu().solve(translation);
}

SimilarityMap SimilarityMap::after(const SimilarityMap& inner) const {
  SimilarityMap out;
  out.ratio = ratio * inner.ratio;
  out.rotation = keep_orthogonal(rotation * inner.rotation);
  out.translation = ratio * (rotation * inner.translation) + translation;
  return out;
}

SimilarityMap similarity_map(double ratio, const Eigen::MatrixXd& rotation,
                             const Eigen::VectorXd& translation) {
  SimilarityMap m;
  m.ratio = ratio;
  m.rotation = rotation;
  m.translation = translation;
  return m;
}

double similarity_dimension(const std::vector<double>& ratios) {
  if (ratios.empty()) throw ifs_error("need at least one contraction ratio");
  for (double r : ratios)
    if (!(r > 0.0) || !(r < 1.0)) throw ifs_error("contraction ratios must lie in (0,1)");
  auto residual = [&](double s) {
    double sum = 0;
    for (double r : ratios) sum += std::pow(r, s);
    return sum - 1.0;
  };
  double lo = 0.0, hi = 64.0;
  double flo = residual(lo);
  if (std::abs(flo) <= kMoranResidual) return lo;
  if (residual(hi) > 0) throw ifs_error("similarity dimension exceeds the bisection bracket [0,64]");
  double best = lo, best_res = std::abs(flo);
  for (int iter = 0; iter < 200; ++iter) {
    double mid = 0.5 * (lo + hi);
    double fm = residual(mid);
    if (std::abs(fm) < best_res) {
      best = mid;
      best_res = std::abs(fm);
    }
    if (fm > 0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-16 * (1.0 + hi)) break;
  }
  if (best_res > kMoranResidual) throw ifs_error("bisection failed to reach the Moran residual");
  return best;
}

SimilarityMap word_map(const Ifs& f, const Word& w) {
  SimilarityMap acc;
  acc.ratio = 1.0;
  acc.rotation = Eigen::MatrixXd::Identity(f.ambient, f.ambient);
  acc.translation = Eigen::VectorXd::Zero(f.ambient);
  for (uint32_t sym : w) {
    if (sym >= f.branching()) throw ifs_error("word symbol out of range");
    acc = acc.after(f.maps[sym]);
  }
  return acc;
}

double word_ratio(const Ifs& f, const Word& w) {
  double r = 1.0;
  for (uint32_t sym : w) {
    if (sym >= f.branching()) throw ifs_error("word symbol out of range");
    r *= f.maps[sym].ratio;
  }
  return r;
}

Eigen::VectorXd attractor_point(const Ifs& f, const Word& w) {
  Eigen::VectorXd x = f.anchor;
  for (auto it = w.rbegin(); it != w.rend(); ++it) {
    if (*it >= f.branching()) throw ifs_error("word symbol out of range");
    x = f.maps[*it].apply(x);
  }
  return x;
}

Word sample_word(const Ifs& f, std::mt19937_64& rng, int depth) {
  Word w(depth);
  for (int i = 0; i < depth; ++i) {
    double u = uniform_unit(rng);
    double acc = 0;
    uint32_t pick = f.branching() - 1;
    for (uint32_t l = 0; l < f.branching(); ++l) {
      acc += f.weights[l];
      if (u < acc) {
        pick = l;
        break;
      }
    }
    w[i] = pick;
  }
  return w;
}

Eigen::VectorXd sample_attractor(const Ifs& f, std::mt19937_64& rng, int depth) {
  return attractor_point(f, sample_word(f, rng, depth));
}

// ---------------------------------------------------------------------------
// certified distances via ball refinement
// ---------------------------------------------------------------------------

namespace {

struct BallNode {
  SimilarityMap map;          // composed map for this cylinder
  Eigen::VectorXd center;     // map(ifs center)
  Eigen::VectorXd anchor;     // map(ifs anchor), a point of the cylinder
  Eigen::VectorXd box_center; // axis box image of the hull box, also certified
  Eigen::VectorXd box_half;
};

BallNode make_node(const Ifs& f, const SimilarityMap& map) {
  BallNode n;
  n.map = map;
  n.center = map.apply(f.center);
  n.anchor = map.apply(f.anchor);
  n.box_center = map.apply(0.5 * (f.bbox_min + f.bbox_max));
  n.box_half =
      (map.ratio * map.rotation).cwiseAbs() * (0.5 * (f.bbox_max - f.bbox_min));
  return n;
}

// Distance lower bound between two axis boxes.
double box_gap(const BallNode& a, const BallNode& b) {
  double s = 0;
  for (int i = 0; i < a.box_center.size(); ++i) {
    double g = std::abs(a.box_center(i) - b.box_center(i)) - a.box_half(i) - b.box_half(i);
    if (g > 0) s += g * g;
  }
  return std::sqrt(s);
}

double point_box_gap(const Eigen::VectorXd& x, const BallNode& b) {
  double s = 0;
  for (int i = 0; i < x.size(); ++i) {
    double g = std::abs(x(i) - b.box_center(i)) - b.box_half(i);
    if (g > 0) s += g * g;
  }
  return std::sqrt(s);
}

struct PairEntry {
  double lower;
  size_t a, b;
  bool operator<(const PairEntry& o) const { return lower > o.lower; }  // min-heap
};

// Certified interval for d(K_a, K_b); `converged` reports whether the target
// relative gap was reached within the budget.  The search stops early once
// the upper bound drops to `give_up_below` (the caller treats that as an
// overlap), since chasing a vanishing distance never converges in relative
// terms.
DistanceBound pair_distance_impl(const Ifs& f, const Word& wa, const Word& wb, double rel_gap,
                                 size_t budget, bool* converged, double give_up_below = 0) {
  std::vector<BallNode> na{make_node(f, word_map(f, wa))};
  std::vector<BallNode> nb{make_node(f, word_map(f, wb))};
  double best_upper = (na[0].anchor - nb[0].anchor).norm();
  std::priority_queue<PairEntry> heap;
  auto pair_lower = [&](size_t ia, size_t ib) {
    double ball = (na[ia].center - nb[ib].center).norm() -
                  (na[ia].map.ratio + nb[ib].map.ratio) * f.radius;
    return std::max(ball, box_gap(na[ia], nb[ib]));
  };
  heap.push({pair_lower(0, 0), 0, 0});
  size_t expansions = 0;
  double top_lower = -std::numeric_limits<double>::infinity();
  while (!heap.empty()) {
    PairEntry top = heap.top();
    top_lower = top.lower;
    if (top.lower >= best_upper) {
      *converged = true;
      return {best_upper, best_upper};
    }
    if (top.lower > 0 && best_upper - top.lower <= rel_gap * top.lower) {
      *converged = true;
      return {top.lower, best_upper};
    }
    if (best_upper <= give_up_below) break;
    if (++expansions > budget) break;
    heap.pop();
    bool split_a = na[top.a].map.ratio >= nb[top.b].map.ratio;
    auto& arena = split_a ? na : nb;
    size_t keep = split_a ? top.b : top.a;
    size_t parent = split_a ? top.a : top.b;
    SimilarityMap parent_map = arena[parent].map;
    for (uint32_t l = 0; l < f.branching(); ++l) {
      arena.push_back(make_node(f, parent_map.after(f.maps[l])));
      size_t child = arena.size() - 1;
      size_t ia = split_a ? child : keep;
      size_t ib = split_a ? keep : child;
      double up = (na[ia].anchor - nb[ib].anchor).norm();
      best_upper = std::min(best_upper, up);
      double lo = pair_lower(ia, ib);
      if (lo <= best_upper) heap.push({lo, ia, ib});
    }
  }
  *converged = false;
  return {std::max(top_lower, 0.0), best_upper};
}

}  // namespace

DistanceBound cylinder_distance(const Ifs& f, const Word& a, const Word& b, double rel_gap,
                                size_t budget) {
  bool converged = false;
  DistanceBound d = pair_distance_impl(f, a, b, rel_gap, budget, &converged);
  if (!converged)
    throw ifs_error("cylinder distance refinement exhausted its budget (interval [" +
                    std::to_string(d.lower) + ", " + std::to_string(d.upper) + "])");
  return d;
}

double separation_constant(const Ifs& f) {
  double overlap_floor = 1e-6 * std::max(1.0, f.radius);
  double rho_lower = std::numeric_limits<double>::infinity();
  for (uint32_t i = 0; i < f.branching(); ++i)
    for (uint32_t j = i + 1; j < f.branching(); ++j) {
      bool converged = false;
      DistanceBound d =
          pair_distance_impl(f, {i}, {j}, 0.01, size_t(1) << 18, &converged, overlap_floor);
      if (d.upper <= overlap_floor)
        throw ifs_error("strong separation violated: level-1 images " + std::to_string(i) +
                        " and " + std::to_string(j) + " overlap or leave a gap below " +
                        std::to_string(overlap_floor));
      if (!converged)
        throw ifs_error("strong separation undecided for level-1 pair " + std::to_string(i) + "," +
                        std::to_string(j) + " (interval [" + std::to_string(d.lower) + ", " +
                        std::to_string(d.upper) + "])");
      rho_lower = std::min(rho_lower, d.lower);
    }
  if (!(rho_lower > 0))
    throw ifs_error("strong separation violated: certified gap is not positive");
  return rho_lower;
}

DistanceBound point_cylinder_distance(const Ifs& f, const Eigen::VectorXd& x, const Word& w,
                                      double abs_gap, size_t budget) {
  struct Entry {
    double lower;
    size_t node;
    bool operator<(const Entry& o) const { return lower > o.lower; }
  };
  std::vector<BallNode> nodes{make_node(f, word_map(f, w))};
  double best_upper = (x - nodes[0].anchor).norm();
  auto node_lower = [&](size_t i) {
    double ball = (x - nodes[i].center).norm() - nodes[i].map.ratio * f.radius;
    return std::max(ball, point_box_gap(x, nodes[i]));
  };
  std::priority_queue<Entry> heap;
  heap.push({node_lower(0), 0});
  size_t expansions = 0;
  while (!heap.empty()) {
    Entry top = heap.top();
    if (top.lower >= best_upper) return {best_upper, best_upper};
    if (best_upper - top.lower <= abs_gap) return {std::max(top.lower, 0.0), best_upper};
    if (++expansions > budget)
      throw ifs_error("point-to-cylinder distance refinement exhausted its budget");
    heap.pop();
    SimilarityMap parent = nodes[top.node].map;
    for (uint32_t l = 0; l < f.branching(); ++l) {
      nodes.push_back(make_node(f, parent.after(f.maps[l])));
      size_t child = nodes.size() - 1;
      best_upper = std::min(best_upper, (x - nodes[child].anchor).norm());
      double lo = node_lower(child);
      if (lo <= best_upper) heap.push({lo, child});
    }
  }
  return {best_upper, best_upper};
}

Word code_of_point(const Ifs& f, const Eigen::VectorXd& x, int depth) {
  if (x.size() != f.ambient) throw ifs_error("point dimension mismatch");
  Word w;
  w.reserve(depth);
  SimilarityMap acc;
  acc.ratio = 1.0;
  acc.rotation = Eigen::MatrixXd::Identity(f.ambient, f.ambient);
  acc.translation = Eigen::VectorXd::Zero(f.ambient);
  for (int level = 0; level < depth; ++level) {
    std::vector<uint32_t> candidates;
    std::vector<SimilarityMap> child_maps(f.branching());
    for (uint32_t l = 0; l < f.branching(); ++l) {
      child_maps[l] = acc.after(f.maps[l]);
      double hull_radius = child_maps[l].ratio * f.radius;
      double tol = f.separation * child_maps[l].ratio / 4.0;
      if ((x - child_maps[l].apply(f.center)).norm() <= hull_radius + tol)
        candidates.push_back(l);
    }
    std::optional<uint32_t> chosen;
    if (candidates.size() == 1) {
      chosen = candidates[0];
    } else if (!candidates.empty()) {
      // overlapping hulls: decide by certified distance to the actual cylinders
      for (uint32_t l : candidates) {
        double tol = f.separation * child_maps[l].ratio / 4.0;
        Word child_word = w;
        child_word.push_back(l);
        DistanceBound d = point_cylinder_distance(f, x, child_word, tol / 8.0);
        if (d.lower <= tol) {
          if (chosen)
            throw ifs_error("coding ambiguous at depth " + std::to_string(level + 1) +
                            ": two cylinders within tolerance");
          chosen = l;
        }
      }
    }
    if (!chosen)
      throw ifs_error("point not resolvable at depth " + std::to_string(level + 1) +
                      ": outside every cylinder by more than the snap tolerance");
    w.push_back(*chosen);
    acc = child_maps[*chosen];
  }
  return w;
}

// ---------------------------------------------------------------------------
// system construction
// ---------------------------------------------------------------------------

Ifs build_ifs(std::vector<SimilarityMap> maps) {
  if (maps.size() < 2) throw ifs_error("an iterated system needs at least two maps");
  if (maps.size() > kMaxMaps) throw ifs_error("too many maps");
  int n = static_cast<int>(maps.front().translation.size());
  if (n < 1) throw ifs_error("ambient dimension must be positive");
  std::vector<double> ratios;
  for (const auto& m : maps) {
    if (m.translation.size() != n || m.rotation.rows() != n || m.rotation.cols() != n)
      throw ifs_error("maps have inconsistent ambient dimensions");
    if (!(m.ratio > 0.0) || !(m.ratio < 1.0))
      throw ifs_error("contraction ratios must lie in (0,1)");
    if (!is_orthogonal(m.rotation, kOrthogonalityTol))
      throw ifs_error("rotation part is not orthogonal within 1e-10");
    ratios.push_back(m.ratio);
  }

  Ifs f;
  f.maps = std::move(maps);
  f.ambient = n;
  f.dimension = similarity_dimension(ratios);
  f.min_ratio = *std::min_element(ratios.begin(), ratios.end());
  double r_max = *std::max_element(ratios.begin(), ratios.end());
  double weight_sum = 0;
  for (double r : ratios) {
    f.weights.push_back(std::pow(r, f.dimension));
    weight_sum += f.weights.back();
  }
  if (std::abs(weight_sum - 1.0) > 1e-12)
    throw ifs_error("natural weights failed to sum to one");
  f.anchor = f.maps[0].fixed_point();

  // invariant bounding ball from the fixed-point centroid
  Eigen::VectorXd c0 = Eigen::VectorXd::Zero(n);
  for (const auto& m : f.maps) c0 += m.fixed_point();
  c0 /= static_cast<double>(f.maps.size());
  double r0 = 0;
  for (const auto& m : f.maps)
    r0 = std::max(r0, (m.apply(c0) - c0).norm() / (1.0 - m.ratio));
  f.center = c0;
  f.radius = r0;

  // refine by sampling anchor points of all depth-D cylinders
  int depth = 1;
  uint64_t count = f.branching();
  while (depth < 48 && integer_pow(r_max, depth) > 1e-3 &&
         count * f.branching() <= kGeometrySampleCap) {
    ++depth;
    count *= f.branching();
  }
  std::vector<Eigen::VectorXd> anchors;
  anchors.reserve(count);
  for (uint64_t i = 0; i < count; ++i)
    anchors.push_back(attractor_point(f, index_word(i, depth, f.branching())));
  double slack = integer_pow(r_max, depth);  // cylinder radius fraction at depth D

  Eigen::VectorXd lo = anchors[0], hi = anchors[0];
  for (const auto& a : anchors) {
    lo = lo.cwiseMin(a);
    hi = hi.cwiseMax(a);
  }
  Eigen::VectorXd c1 = 0.5 * (lo + hi);
  double r1 = 0;
  for (const auto& a : anchors) r1 = std::max(r1, (a - c1).norm());
  r1 += slack * 2.0 * r0;
  if (r1 < f.radius) {
    f.center = c1;
    f.radius = r1;
  }

  double pair_max = 0;
  for (size_t i = 0; i < anchors.size(); ++i)
    for (size_t j = i + 1; j < anchors.size(); ++j)
      pair_max = std::max(pair_max, (anchors[i] - anchors[j]).squaredNorm());
  pair_max = std::sqrt(pair_max);
  f.diameter = 2.0 * f.radius;
  if (2.0 * slack < 1.0)
    f.diameter = std::min(f.diameter, pair_max / (1.0 - 2.0 * slack));

  // outer hull box: start from the ball box and pump it through the system;
  // each pass keeps it an outer cover while shrinking toward the hull
  Eigen::VectorXd bmin = f.center.array() - f.radius;
  Eigen::VectorXd bmax = f.center.array() + f.radius;
  for (int pass = 0; pass < 256; ++pass) {
    Eigen::VectorXd c = 0.5 * (bmin + bmax);
    Eigen::VectorXd h = 0.5 * (bmax - bmin);
    Eigen::VectorXd nmin, nmax;
    for (size_t i = 0; i < f.maps.size(); ++i) {
      const auto& m = f.maps[i];
      Eigen::VectorXd cc = m.apply(c);
      Eigen::VectorXd hh = (m.ratio * m.rotation).cwiseAbs() * h;
      if (i == 0) {
        nmin = cc - hh;
        nmax = cc + hh;
      } else {
        nmin = nmin.cwiseMin(cc - hh);
        nmax = nmax.cwiseMax(cc + hh);
      }
    }
    double change = (nmin - bmin).cwiseAbs().maxCoeff() + (nmax - bmax).cwiseAbs().maxCoeff();
    bmin = nmin;
    bmax = nmax;
    if (change < 1e-14 * std::max(1.0, f.radius)) break;
  }
  f.bbox_min = bmin;
  f.bbox_max = bmax;

  f.separation = separation_constant(f);
  return f;
}

Ifs cantor_ifs(double rho) {
  if (!(rho > 0.0) || !(rho < 0.5))
    throw ifs_error("cantor ratio must lie in (0, 1/2) for strong separation");
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd zero(1), right(1);
  zero << 0.0;
  right << 1.0 - rho;
  return build_ifs({similarity_map(rho, id, zero), similarity_map(rho, id, right)});
}

Ifs corner_square_ifs(double ratio) {
  if (!(ratio > 0.0) || !(ratio < 0.5)) throw ifs_error("corner ratio must lie in (0, 1/2)");
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  std::vector<SimilarityMap> maps;
  for (int i = 0; i < 4; ++i) {
    Eigen::VectorXd t(2);
    t << (i & 1) * (1.0 - ratio), ((i >> 1) & 1) * (1.0 - ratio);
    maps.push_back(similarity_map(ratio, id, t));
  }
  return build_ifs(std::move(maps));
}

Ifs corner_cube_ifs(double ratio) {
  if (!(ratio > 0.0) || !(ratio < 0.5)) throw ifs_error("corner ratio must lie in (0, 1/2)");
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
  std::vector<SimilarityMap> maps;
  for (int i = 0; i < 8; ++i) {
    Eigen::VectorXd t(3);
    t << (i & 1) * (1.0 - ratio), ((i >> 1) & 1) * (1.0 - ratio), ((i >> 2) & 1) * (1.0 - ratio);
    maps.push_back(similarity_map(ratio, id, t));
  }
  return build_ifs(std::move(maps));
}

// ---------------------------------------------------------------------------
// file format
// ---------------------------------------------------------------------------

namespace {

std::vector<double> parse_csv_doubles(const std::string& text, const std::string& what) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t pos = 0;
      vals.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ifs_error("bad " + what + " entry: " + item);
    }
  }
  if (vals.empty()) throw ifs_error("empty " + what + " list");
  return vals;
}

}  // namespace

Ifs load_ifs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ifs_error("cannot open ifs file: " + path);
  std::string line;
  int ambient = 0;
  std::vector<SimilarityMap> maps;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;
    if (head == "ambient_dim") {
      std::string eq;
      if (!(ls >> eq >> ambient) || eq != "=" || ambient < 1)
        throw ifs_error(path + ":" + std::to_string(lineno) + ": bad ambient_dim line");
    } else if (head == "map") {
      if (ambient == 0)
        throw ifs_error(path + ":" + std::to_string(lineno) + ": ambient_dim must come first");
      double ratio = -1;
      std::vector<double> rot, trans;
      std::string token;
      while (ls >> token) {
        size_t eq = token.find('=');
        if (eq == std::string::npos)
          throw ifs_error(path + ":" + std::to_string(lineno) + ": expected key=value, got " + token);
        std::string key = token.substr(0, eq);
        std::string value = token.substr(eq + 1);
        if (key == "ratio")
          ratio = parse_csv_doubles(value, "ratio")[0];
        else if (key == "rotation")
          rot = parse_csv_doubles(value, "rotation");
        else if (key == "translation")
          trans = parse_csv_doubles(value, "translation");
        else
          throw ifs_error(path + ":" + std::to_string(lineno) + ": unknown map field " + key);
      }
      if (ratio < 0 || rot.size() != static_cast<size_t>(ambient * ambient) ||
          trans.size() != static_cast<size_t>(ambient))
        throw ifs_error(path + ":" + std::to_string(lineno) + ": map line is incomplete");
      Eigen::MatrixXd r(ambient, ambient);
      for (int i = 0; i < ambient; ++i)
        for (int j = 0; j < ambient; ++j) r(i, j) = rot[i * ambient + j];
      Eigen::VectorXd t(ambient);
      for (int i = 0; i < ambient; ++i) t(i) = trans[i];
      maps.push_back(similarity_map(ratio, r, t));
    } else {
      throw ifs_error(path + ":" + std::to_string(lineno) + ": unknown directive " + head);
    }
  }
  return build_ifs(std::move(maps));
}

void save_ifs(const Ifs& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ifs_error("cannot write ifs file: " + path);
  char buf[40];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "ambient_dim = " << f.ambient << "\n";
  for (const auto& m : f.maps) {
    out << "map ratio=" << fmt(m.ratio) << " rotation=";
    for (int i = 0; i < f.ambient; ++i)
      for (int j = 0; j < f.ambient; ++j)
        out << (i + j ? "," : "") << fmt(m.rotation(i, j));
    out << " translation=";
    for (int i = 0; i < f.ambient; ++i) out << (i ? "," : "") << fmt(m.translation(i));
    out << "\n";
  }
}

}  // namespace fracslice
