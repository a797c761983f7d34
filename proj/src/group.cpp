#include "fracslice/group.hpp"

#include <cmath>
#include <deque>
#include <unordered_map>

namespace fracslice {

namespace {

// Bucketed lookup so group closure stays near-linear even when it has to
// touch the element cap before declaring the group infinite.
class ElementSet {
 public:
  explicit ElementSet(double tol) : tol_(tol), quantum_(std::max(tol * 16, 1e-7)) {}

  std::optional<size_t> find(const std::vector<Eigen::MatrixXd>& store,
                             const Eigen::MatrixXd& m) const {
    int n = static_cast<int>(m.rows());
    double a = m(0, 0), b = m(0, n - 1);
    long ia = std::lround(a / quantum_), ib = std::lround(b / quantum_);
    for (long da = -1; da <= 1; ++da)
      for (long db = -1; db <= 1; ++db) {
        auto it = buckets_.find(key(ia + da, ib + db));
        if (it == buckets_.end()) continue;
        for (size_t idx : it->second)
          if ((store[idx] - m).cwiseAbs().maxCoeff() <= tol_) return idx;
      }
    return std::nullopt;
  }

  void insert(const std::vector<Eigen::MatrixXd>& store, size_t idx) {
    const Eigen::MatrixXd& m = store[idx];
    int n = static_cast<int>(m.rows());
    long ia = std::lround(m(0, 0) / quantum_);
    long ib = std::lround(m(0, n - 1) / quantum_);
    buckets_[key(ia, ib)].push_back(idx);
  }

 private:
  static uint64_t key(long a, long b) {
    return static_cast<uint64_t>(a) * 0x9e3779b97f4a7c15ull ^ static_cast<uint64_t>(b);
  }
  double tol_;
  double quantum_;
  std::unordered_map<uint64_t, std::vector<size_t>> buckets_;
};

}  // namespace

bool is_orthogonal(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  Eigen::MatrixXd gram = m.transpose() * m;
  return (gram - Eigen::MatrixXd::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() <= tol;
}

Eigen::MatrixXd reorthonormalize(const Eigen::MatrixXd& m) {
  // polar factor: the orthogonal matrix nearest to m in Frobenius norm
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

Eigen::MatrixXd keep_orthogonal(Eigen::MatrixXd m) {
  Eigen::MatrixXd gram = m.transpose() * m;
  double drift = (gram - Eigen::MatrixXd::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
  if (drift > kDriftTol) return reorthonormalize(m);
  return m;
}

Eigen::MatrixXd sample_orthogonal(int n, std::mt19937_64& rng) {
  if (n < 1) throw group_error("ambient dimension must be positive");
  Eigen::MatrixXd g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = standard_normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

Subspace axis_subspace(int n, int m) {
  if (m < 1 || m >= n) throw group_error("codimension m must satisfy 1 <= m < n");
  Subspace v;
  v.basis = Eigen::MatrixXd::Identity(n, n).rightCols(n - m);
  v.basis_perp = Eigen::MatrixXd::Identity(n, n).leftCols(m);
  return v;
}

Subspace span_subspace(const Eigen::MatrixXd& columns) {
  int n = static_cast<int>(columns.rows());
  int k = static_cast<int>(columns.cols());
  if (k < 1 || k >= n) throw group_error("spanning set must give 1 <= dim V < n");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(columns);
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  double scale = columns.cwiseAbs().maxCoeff();
  for (int i = 0; i < k; ++i)
    if (std::abs(r(i, i)) <= 1e-12 * std::max(scale, 1.0))
      throw group_error("spanning columns are not linearly independent");
  Eigen::MatrixXd q = Eigen::MatrixXd(qr.householderQ());
  Subspace v;
  v.basis = q.leftCols(k);
  v.basis_perp = q.rightCols(n - k);
  return v;
}

Subspace rotate_subspace(const Eigen::MatrixXd& g, const Subspace& v) {
  Subspace out;
  out.basis = g * v.basis;
  out.basis_perp = g * v.basis_perp;
  return out;
}

Subspace sample_grassmann(int n, int m, std::mt19937_64& rng) {
  return rotate_subspace(sample_orthogonal(n, rng), axis_subspace(n, m));
}

Eigen::VectorXd project_coords(const Subspace& v, const Eigen::VectorXd& x) {
  return v.basis_perp.transpose() * x;
}

double grassmann_metric(const Subspace& a, const Subspace& b) {
  Eigen::MatrixXd diff = a.basis * a.basis.transpose() - b.basis * b.basis.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(diff, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

std::optional<size_t> RotationGroup::find(const Eigen::MatrixXd& m) const {
  for (size_t i = 0; i < elements.size(); ++i)
    if ((elements[i] - m).cwiseAbs().maxCoeff() <= dedupe_tol) return i;
  return std::nullopt;
}

RotationGroup close_group(const std::vector<Eigen::MatrixXd>& generators, double dedupe_tol,
                          size_t cap) {
  if (generators.empty()) throw group_error("need at least one generator");
  int n = static_cast<int>(generators.front().rows());
  RotationGroup g;
  g.n = n;
  g.dedupe_tol = dedupe_tol;
  for (const auto& m : generators) {
    if (m.rows() != n || m.cols() != n) throw group_error("generators have mixed dimensions");
    if (!is_orthogonal(m)) throw group_error("generator is not orthogonal");
  }

  // generator list closed under inverse, deduplicated
  for (const auto& m : generators) {
    for (const Eigen::MatrixXd& cand : {m, Eigen::MatrixXd(m.transpose())}) {
      bool known = false;
      for (const auto& have : g.generators)
        if ((have - cand).cwiseAbs().maxCoeff() <= dedupe_tol) {
          known = true;
          break;
        }
      if (!known) g.generators.push_back(cand);
    }
  }

  ElementSet index(dedupe_tol);
  g.elements.push_back(Eigen::MatrixXd::Identity(n, n));
  index.insert(g.elements, 0);
  std::deque<size_t> pending{0};
  while (!pending.empty()) {
    size_t at = pending.front();
    pending.pop_front();
    for (const auto& gen : g.generators) {
      Eigen::MatrixXd cand = keep_orthogonal(g.elements[at] * gen);
      if (index.find(g.elements, cand)) continue;
      g.elements.push_back(std::move(cand));
      index.insert(g.elements, g.elements.size() - 1);
      pending.push_back(g.elements.size() - 1);
      if (g.elements.size() > cap) {
        g.finite = false;
        g.elements.clear();
        return g;
      }
    }
  }
  return g;
}

Eigen::MatrixXd haar_sample(const RotationGroup& g, std::mt19937_64& rng) {
  if (g.finite) {
    if (g.elements.empty()) throw group_error("finite group has no stored elements");
    return g.elements[uniform_index(rng, g.elements.size())];
  }
  Eigen::MatrixXd walk = Eigen::MatrixXd::Identity(g.n, g.n);
  for (int i = 0; i < g.walk_length; ++i)
    walk = keep_orthogonal(walk * g.generators[uniform_index(rng, g.generators.size())]);
  return walk;
}

ConvolutionCheck convolution_identity_check(const RotationGroup& q, const std::vector<double>& eta,
                                            const std::vector<size_t>& subset) {
  if (!q.finite || q.elements.empty())
    throw group_error("convolution identity check needs a finite group");
  size_t order = q.order();
  if (eta.size() != order) throw group_error("eta must have one weight per group element");
  double eta_total = 0;
  for (double w : eta) {
    if (w < 0) throw group_error("eta weights must be nonnegative");
    eta_total += w;
  }
  if (std::abs(eta_total - 1.0) > 1e-9) throw group_error("eta must sum to one");

  std::vector<char> in_subset(order, 0);
  for (size_t idx : subset) {
    if (idx >= order) throw group_error("subset index out of range");
    if (in_subset[idx]) throw group_error("subset contains a duplicate index");
    in_subset[idx] = 1;
  }

  ConvolutionCheck chk;
  chk.lhs = static_cast<double>(subset.size()) / static_cast<double>(order);
  double acc = 0;
  for (size_t iq = 0; iq < order; ++iq) {
    // eta(E q^{-1}) = sum of eta over elements e with e*q in E
    for (size_t ie = 0; ie < order; ++ie) {
      if (eta[ie] == 0) continue;
      auto prod = q.find(q.elements[ie] * q.elements[iq]);
      if (!prod) throw group_error("group is not closed under multiplication at the stored tolerance");
      if (in_subset[*prod]) acc += eta[ie];
    }
  }
  chk.rhs = acc / static_cast<double>(order);
  return chk;
}

Eigen::MatrixXd plane_rotation(int n, int i, int j, double angle) {
  if (i == j || i < 0 || j < 0 || i >= n || j >= n) throw group_error("bad rotation plane");
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  double c = std::cos(angle), s = std::sin(angle);
  m(i, i) = c;
  m(j, j) = c;
  m(i, j) = -s;
  m(j, i) = s;
  return m;
}

}  // namespace fracslice
