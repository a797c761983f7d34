#include "doctest.h"
#include "fracslice/group.hpp"
#include "stat_utils.hpp"

#include <cmath>

using namespace fracslice;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd rot2(double angle) { return plane_rotation(2, 0, 1, angle); }

}  // namespace

TEST_CASE("sample_orthogonal produces orthogonal matrices") {
  auto g = make_stream(2, "ortho");
  for (int n : {1, 2, 3, 5}) {
    for (int rep = 0; rep < 20; ++rep) {
      MatrixXd m = sample_orthogonal(n, g);
      CHECK(is_orthogonal(m, 1e-10));
    }
  }
}

TEST_CASE("sample_orthogonal n=1 is a fair sign") {
  auto g = make_stream(4, "ortho-sign");
  std::vector<int64_t> counts(2, 0);
  const int n = 20000;
  for (int i = 0; i < n; ++i) ++counts[sample_orthogonal(1, g)(0, 0) > 0 ? 0 : 1];
  CHECK(testutil::chi2_counts_pvalue(counts, {n / 2.0, n / 2.0}) > 0.001);
}

TEST_CASE("sample_orthogonal n=2 first column angle is uniform") {
  auto g = make_stream(6, "ortho-angle");
  std::vector<double> angles;
  for (int i = 0; i < 3000; ++i) {
    MatrixXd m = sample_orthogonal(2, g);
    angles.push_back(std::atan2(m(1, 0), m(0, 0)));
  }
  CHECK(testutil::ks_uniform_pvalue(angles, -M_PI, M_PI) > 0.001);
}

TEST_CASE("sample_orthogonal is rotation invariant in distribution") {
  auto g = make_stream(8, "ortho-invariance");
  MatrixXd fixed = rot2(0.7);
  std::vector<double> rotated_angles;
  for (int i = 0; i < 3000; ++i) {
    MatrixXd m = fixed * sample_orthogonal(2, g);
    rotated_angles.push_back(std::atan2(m(1, 0), m(0, 0)));
  }
  CHECK(testutil::ks_uniform_pvalue(rotated_angles, -M_PI, M_PI) > 0.001);
}

TEST_CASE("subspace bases are orthonormal and complementary") {
  auto g = make_stream(10, "grassmann-basis");
  for (auto [n, m] : std::vector<std::pair<int, int>>{{2, 1}, {3, 1}, {3, 2}, {5, 2}}) {
    Subspace v = sample_grassmann(n, m, g);
    CHECK(v.dim() == n - m);
    CHECK(v.codim() == m);
    MatrixXd all(n, n);
    all << v.basis, v.basis_perp;
    CHECK(is_orthogonal(all, 1e-10));
    MatrixXd p = v.basis * v.basis.transpose() + v.basis_perp * v.basis_perp.transpose();
    CHECK((p - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("sample_grassmann lines in the plane have uniform direction mod pi") {
  auto g = make_stream(12, "grassmann-angle");
  std::vector<double> angles;
  for (int i = 0; i < 3000; ++i) {
    Subspace v = sample_grassmann(2, 1, g);
    double a = std::atan2(v.basis(1, 0), v.basis(0, 0));
    angles.push_back(std::fmod(a + 2 * M_PI, M_PI));
  }
  CHECK(testutil::ks_uniform_pvalue(angles, 0, M_PI) > 0.001);
}

TEST_CASE("grassmann sampling is rotation invariant") {
  auto g = make_stream(14, "grassmann-invariance");
  MatrixXd fixed = rot2(1.1);
  std::vector<double> angles;
  for (int i = 0; i < 3000; ++i) {
    Subspace v = rotate_subspace(fixed, sample_grassmann(2, 1, g));
    double a = std::atan2(v.basis(1, 0), v.basis(0, 0));
    angles.push_back(std::fmod(a + 2 * M_PI, M_PI));
  }
  CHECK(testutil::ks_uniform_pvalue(angles, 0, M_PI) > 0.001);
}

TEST_CASE("project_coords matches hand values") {
  // line V spanned by (1,1)/sqrt(2); the complement carries (1,0) to distance 1/sqrt(2)
  MatrixXd dir(2, 1);
  dir << 1, 1;
  Subspace v = span_subspace(dir);
  VectorXd x(2);
  x << 1, 0;
  CHECK(project_coords(v, x).norm() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  VectorXd on_v(2);
  on_v << 3, 3;
  CHECK(project_coords(v, on_v).norm() < 1e-12);

  VectorXd on_perp(2);
  on_perp << 2, -2;
  CHECK(project_coords(v, on_perp).norm() == doctest::Approx(std::sqrt(8.0)).epsilon(1e-12));
}

TEST_CASE("grassmann_metric separates subspaces") {
  MatrixXd e1(2, 1), e2(2, 1);
  e1 << 1, 0;
  e2 << 0, 1;
  Subspace v1 = span_subspace(e1);
  Subspace v2 = span_subspace(e2);
  CHECK(grassmann_metric(v1, v1) < 1e-14);
  CHECK(grassmann_metric(v1, v2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(grassmann_metric(v1, v2) == doctest::Approx(grassmann_metric(v2, v1)).epsilon(1e-14));
  // metric is invariant under a common rotation
  MatrixXd g = rot2(0.35);
  Subspace w1 = rotate_subspace(g, v1);
  Subspace w2 = rotate_subspace(g, v2);
  CHECK(grassmann_metric(w1, w2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("close_group on the trivial generator set") {
  RotationGroup g = close_group({MatrixXd::Identity(2, 2)});
  CHECK(g.finite);
  CHECK(g.order() == 1);
}

TEST_CASE("close_group builds the cyclic group of order four") {
  RotationGroup g = close_group({rot2(M_PI / 2)});
  REQUIRE(g.finite);
  CHECK(g.order() == 4);
  // closed under products
  auto rng = make_stream(1, "closure");
  for (int i = 0; i < 30; ++i) {
    size_t a = uniform_index(rng, g.order());
    size_t b = uniform_index(rng, g.order());
    CHECK(g.find(g.elements[a] * g.elements[b]).has_value());
    CHECK(g.find(g.elements[a].transpose()).has_value());
  }
}

TEST_CASE("close_group builds a dihedral group of order eight") {
  MatrixXd reflect(2, 2);
  reflect << 1, 0, 0, -1;
  RotationGroup g = close_group({rot2(M_PI / 2), reflect});
  REQUIRE(g.finite);
  CHECK(g.order() == 8);
}

TEST_CASE("close_group flags an irrational rotation as infinite") {
  RotationGroup g = close_group({rot2(1.0)}, kDedupeTol, 2000);
  CHECK_FALSE(g.finite);
  CHECK(g.elements.empty());
}

TEST_CASE("haar_sample on a finite group is uniform") {
  RotationGroup g = close_group({rot2(M_PI / 2)});
  auto rng = make_stream(16, "haar-finite");
  std::vector<int64_t> counts(g.order(), 0);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    auto idx = g.find(haar_sample(g, rng));
    REQUIRE(idx.has_value());
    ++counts[*idx];
  }
  std::vector<double> expected(g.order(), double(n) / g.order());
  CHECK(testutil::chi2_counts_pvalue(counts, expected) > 0.001);
}

TEST_CASE("haar_sample on the trivial group returns identity") {
  RotationGroup g = close_group({MatrixXd::Identity(3, 3)});
  auto rng = make_stream(18, "haar-trivial");
  for (int i = 0; i < 5; ++i)
    CHECK((haar_sample(g, rng) - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("haar_sample walk kills low harmonics for an irrational rotation") {
  RotationGroup g = close_group({rot2(1.0)}, kDedupeTol, 2000);
  REQUIRE_FALSE(g.finite);
  auto rng = make_stream(20, "haar-walk");
  const int n = 4000;
  double c = 0, s = 0;
  for (int i = 0; i < n; ++i) {
    MatrixXd m = haar_sample(g, rng);
    CHECK(is_orthogonal(m, 1e-9));
    c += m(0, 0);
    s += m(1, 0);
  }
  // first Fourier coefficient of the walk distribution decays like cos(1)^64
  CHECK(std::abs(c / n) < 0.05);
  CHECK(std::abs(s / n) < 0.05);
}

TEST_CASE("haar_sample walk over two incommensurate rotations equidistributes") {
  RotationGroup g = close_group({rot2(1.0), rot2(std::sqrt(2.0))}, kDedupeTol, 2000);
  REQUIRE_FALSE(g.finite);
  auto rng = make_stream(22, "haar-walk2");
  std::vector<double> angles;
  for (int i = 0; i < 2000; ++i) {
    MatrixXd m = haar_sample(g, rng);
    angles.push_back(std::atan2(m(1, 0), m(0, 0)));
  }
  CHECK(testutil::ks_uniform_pvalue(angles, -M_PI, M_PI) > 0.001);
}

TEST_CASE("convolution identity: point mass translate") {
  RotationGroup g = close_group({rot2(M_PI / 2)});
  REQUIRE(g.order() == 4);
  auto quarter = g.find(rot2(M_PI / 2));
  REQUIRE(quarter.has_value());
  std::vector<double> eta(g.order(), 0.0);
  eta[*quarter] = 1.0;
  auto id = g.find(MatrixXd::Identity(2, 2));
  REQUIRE(id.has_value());
  ConvolutionCheck chk = convolution_identity_check(g, eta, {*id});
  CHECK(chk.lhs == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(chk.gap() < 1e-15);
}

TEST_CASE("convolution identity: uniform eta and full subset") {
  RotationGroup g = close_group({rot2(M_PI / 3)});
  REQUIRE(g.order() == 6);
  std::vector<double> eta(g.order(), 1.0 / 6.0);
  ConvolutionCheck chk = convolution_identity_check(g, eta, {0, 2, 5});
  CHECK(chk.lhs == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(chk.gap() < 1e-14);

  std::vector<size_t> all{0, 1, 2, 3, 4, 5};
  std::vector<double> eta2{0.3, 0.1, 0.05, 0.25, 0.2, 0.1};
  ConvolutionCheck full = convolution_identity_check(g, eta2, all);
  CHECK(full.lhs == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(full.gap() < 1e-14);
}

TEST_CASE("convolution identity holds for randomized groups, weights and subsets") {
  auto rng = make_stream(24, "convolution-random");
  for (int trial = 0; trial < 50; ++trial) {
    int k = 1 + static_cast<int>(uniform_index(rng, 12));
    bool dihedral = k <= 12 && uniform_unit(rng) < 0.5;
    std::vector<MatrixXd> gens{rot2(2 * M_PI / k)};
    if (dihedral) {
      MatrixXd reflect(2, 2);
      reflect << 1, 0, 0, -1;
      gens.push_back(reflect);
    }
    RotationGroup g = close_group(gens);
    REQUIRE(g.finite);
    REQUIRE(g.order() <= 24);
    std::vector<double> eta(g.order());
    double total = 0;
    for (auto& e : eta) total += (e = uniform_unit(rng) + 1e-3);
    for (auto& e : eta) e /= total;
    std::vector<size_t> subset;
    for (size_t i = 0; i < g.order(); ++i)
      if (uniform_unit(rng) < 0.5) subset.push_back(i);
    ConvolutionCheck chk = convolution_identity_check(g, eta, subset);
    CHECK(chk.gap() < 1e-12);
  }
}

TEST_CASE("reorthonormalize repairs drifted products") {
  auto rng = make_stream(26, "drift");
  MatrixXd m = sample_orthogonal(3, rng);
  for (int i = 0; i < 200; ++i) m = m * sample_orthogonal(3, rng);  // accumulate drift
  m.array() += 1e-9;
  MatrixXd fixed = reorthonormalize(m);
  CHECK(is_orthogonal(fixed, 1e-13));
  CHECK((fixed - m).cwiseAbs().maxCoeff() < 1e-7);
}
