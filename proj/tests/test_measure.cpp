#include "doctest.h"
#include "fracslice/measure.hpp"
#include "stat_utils.hpp"

#include <cmath>

using namespace fracslice;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec1(double x) {
  VectorXd v(1);
  v << x;
  return v;
}

VectorXd vec2(double x, double y) {
  VectorXd v(2);
  v << x, y;
  return v;
}

DiscreteMeasure uniform_line_measure(int count) {
  DiscreteMeasure mu;
  mu.points.resize(1, count);
  mu.weights.resize(count);
  for (int i = 0; i < count; ++i) {
    mu.points(0, i) = (i + 0.5) / count;
    mu.weights(i) = 1.0 / count;
  }
  mu.resolution = 1.0 / count;
  mu.bbox_min = vec1(0.0);
  mu.bbox_max = vec1(1.0);
  return mu;
}

}  // namespace

TEST_CASE("attractor_atoms enumerates cylinders lexicographically") {
  Ifs f = cantor_ifs(0.25);
  DiscreteMeasure mu = attractor_atoms(f, 2);
  REQUIRE(mu.size() == 4);
  CHECK(mu.points(0, 0) == doctest::Approx(0.0));
  CHECK(mu.points(0, 1) == doctest::Approx(0.1875));
  CHECK(mu.points(0, 2) == doctest::Approx(0.75));
  CHECK(mu.points(0, 3) == doctest::Approx(0.9375));
  for (int i = 0; i < 4; ++i) CHECK(mu.weights(i) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(std::abs(mu.total() - 1.0) < 1e-12);
  CHECK(mu.branching == 2);
  CHECK(mu.tree_depth == 2);
  CHECK(mu.resolution == doctest::Approx(f.diameter / 16.0));

  DiscreteMeasure root = attractor_atoms(f, 0);
  REQUIRE(root.size() == 1);
  CHECK(root.weights(0) == doctest::Approx(1.0));
  CHECK(root.points(0, 0) == doctest::Approx(f.anchor(0)));

  CHECK_THROWS_AS(attractor_atoms(f, 30), measure_error);
}

TEST_CASE("atom weights follow the natural measure") {
  Ifs f = corner_square_ifs(1.0 / 3.0);
  DiscreteMeasure mu = attractor_atoms(f, 4);
  CHECK(std::abs(mu.total() - 1.0) < 1e-12);
  auto rng = make_stream(50, "atom-weights");
  for (int trial = 0; trial < 20; ++trial) {
    Word w = sample_word(f, rng, 4);
    int64_t idx = static_cast<int64_t>(word_index(w, f.branching()));
    double expect = std::pow(word_ratio(f, w), f.dimension);
    CHECK(mu.weights(idx) == doctest::Approx(expect).epsilon(1e-12));
    CHECK((mu.points.col(idx) - attractor_point(f, w)).norm() < 1e-14);
  }
}

TEST_CASE("cylinder_block addresses contiguous sub-trees") {
  Ifs f = cantor_ifs(0.25);
  DiscreteMeasure mu = attractor_atoms(f, 3);
  auto [b0, e0] = cylinder_block(mu, {});
  CHECK(b0 == 0);
  CHECK(e0 == 8);
  auto [b1, e1] = cylinder_block(mu, {1});
  CHECK(b1 == 4);
  CHECK(e1 == 8);
  auto [b2, e2] = cylinder_block(mu, {0, 1, 1});
  CHECK(b2 == 3);
  CHECK(e2 == 4);
  // block mass equals the word weight
  double mass = 0;
  for (int64_t i = b1; i < e1; ++i) mass += mu.weights(i);
  CHECK(mass == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(cylinder_block(mu, {0, 1, 1, 0}), measure_error);
}

TEST_CASE("ball_mass matches the cylinder structure of the Cantor measure") {
  Ifs f = cantor_ifs(0.25);
  DiscreteMeasure mu = attractor_atoms(f, 12);
  // B(0, 4^-k) holds exactly the cylinder 0^k
  for (int k = 1; k <= 6; ++k) {
    double mass = ball_mass(mu, vec1(0.0), std::pow(0.25, k));
    CHECK(mass == doctest::Approx(std::pow(0.5, k)).epsilon(1e-13));
  }
  CHECK(ball_mass(mu, vec1(0.5), 2.0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(ball_mass(mu, vec1(0.5), 0.2) == doctest::Approx(0.0));
  // monotone in the radius
  double prev = 0;
  for (double r : {0.01, 0.1, 0.3, 0.6, 1.1}) {
    double m = ball_mass(mu, vec1(0.3), r);
    CHECK(m >= prev - 1e-15);
    prev = m;
  }
}

TEST_CASE("pushforward_project keeps totals and projects coordinates") {
  Ifs f = corner_cube_ifs(0.45);
  DiscreteMeasure mu = attractor_atoms(f, 2);
  auto rng = make_stream(52, "pushforward");
  Subspace v = sample_grassmann(3, 1, rng);
  DiscreteMeasure nu = pushforward_project(mu, v);
  CHECK(nu.ambient() == 1);
  CHECK(nu.size() == mu.size());
  CHECK(std::abs(nu.total() - mu.total()) < 1e-12);
  CHECK(nu.resolution == doctest::Approx(mu.resolution));
  for (int64_t i = 0; i < mu.size(); ++i) {
    VectorXd expect = project_coords(v, mu.points.col(i));
    CHECK((nu.points.col(i) - expect).norm() < 1e-12);
  }
}

TEST_CASE("projecting the product onto the x-axis recovers the first factor") {
  Ifs fa = cantor_ifs(0.25);
  Ifs fb = cantor_ifs(1.0 / 3.0);
  DiscreteMeasure flat = product_measure_flat(attractor_atoms(fa, 4), attractor_atoms(fb, 3));
  // V is the vertical axis, so V_perp coordinates are the x coordinates
  MatrixXd vertical(2, 1);
  vertical << 0, 1;
  Subspace v = span_subspace(vertical);
  DiscreteMeasure proj = pushforward_project(flat, v);
  DiscreteMeasure marginal = attractor_atoms(fa, 4);
  auto rng = make_stream(54, "marginal");
  for (int trial = 0; trial < 40; ++trial) {
    double c = uniform_range(rng, -0.2, 1.2);
    double r = uniform_range(rng, 0.01, 0.6);
    // evaluate at the image coordinate so the sign of the perp basis is moot
    double lhs = ball_mass(proj, project_coords(v, vec2(c, 0.0)), r);
    double rhs = ball_mass(marginal, vec1(c), r);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("density_profile of a uniform measure is flat at one") {
  DiscreteMeasure mu = uniform_line_measure(4096);
  LadderParams params;
  params.eps0 = 0.125;
  params.levels = 6;
  DensityProfile p = density_profile(mu, vec1(0.5), 1, params);
  REQUIRE(p.eps.size() == 6);
  for (size_t j = 0; j < p.eps.size(); ++j) {
    CHECK(p.in_window[j] == 1);
    CHECK(p.ratio[j] == doctest::Approx(1.0).epsilon(0.05));
  }
  CHECK(p.theta_lower_hat == doctest::Approx(1.0).epsilon(0.05));
  CHECK(p.theta_upper_hat == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("density_profile of a point mass doubles every level") {
  DiscreteMeasure mu;
  mu.points = MatrixXd::Zero(1, 1);
  mu.weights = VectorXd::Ones(1);
  mu.resolution = 1e-12;
  mu.bbox_min = vec1(0.0);
  mu.bbox_max = vec1(0.0);
  LadderParams params;
  params.eps0 = 1.0;
  params.levels = 8;
  DensityProfile p = density_profile(mu, vec1(0.0), 1, params);
  for (int j = 1; j < 8; ++j)
    CHECK(p.ratio[j] == doctest::Approx(2.0 * p.ratio[j - 1]).epsilon(1e-12));
}

TEST_CASE("density_profile detects the dimension gap of the Cantor measure at zero") {
  Ifs f = cantor_ifs(0.25);
  DiscreteMeasure mu = attractor_atoms(f, 12);
  LadderParams params;
  params.eps0 = 0.25;
  params.levels = 12;
  DensityProfile p = density_profile(mu, vec1(0.0), 1, params);
  // mass(B(0, 2^-m)) = 2^-ceil(m/2), so the ratio at eps_j (m = j + 2) is
  // 2^(m - 1 - ceil(m/2)); exact for every window level
  for (size_t j = 0; j < p.eps.size(); ++j) {
    if (!p.in_window[j]) continue;
    int m = static_cast<int>(j) + 2;
    double expect = std::pow(2.0, m - 1 - (m + 1) / 2);
    CHECK(p.ratio[j] == doctest::Approx(expect).epsilon(1e-12));
  }
  // ratios grow without bound against exponent 1: the hats spread widely
  CHECK(p.theta_upper_hat >= 8.0 * p.theta_lower_hat);
}

TEST_CASE("f_estimate matches the explicit projected profile") {
  Ifs f = corner_square_ifs(1.0 / 3.0);
  DiscreteMeasure mu = attractor_atoms(f, 6);
  MatrixXd vertical(2, 1);
  vertical << 0, 1;
  Subspace v = span_subspace(vertical);
  auto rng = make_stream(56, "f-vs-profile");
  LadderParams params;
  params.eps0 = 0.25;
  params.levels = 4;
  for (int trial = 0; trial < 10; ++trial) {
    VectorXd x = sample_attractor(f, rng);
    DensityProfile lhs = f_estimate(mu, x, MatrixXd::Identity(2, 2), v, params);
    DensityProfile rhs = density_profile(pushforward_project(mu, v), project_coords(v, x), 1, params);
    REQUIRE(lhs.eps.size() == rhs.eps.size());
    for (size_t j = 0; j < lhs.eps.size(); ++j)
      CHECK(lhs.ratio[j] == doctest::Approx(rhs.ratio[j]).epsilon(1e-10));
    CHECK(lhs.theta_lower_hat == doctest::Approx(rhs.theta_lower_hat).epsilon(1e-10));
    CHECK(lhs.theta_upper_hat == doctest::Approx(rhs.theta_upper_hat).epsilon(1e-10));
  }
}

TEST_CASE("f_estimate projects onto the rotated complement") {
  Ifs f = corner_square_ifs(1.0 / 3.0);
  DiscreteMeasure mu = attractor_atoms(f, 5);
  MatrixXd h = plane_rotation(2, 0, 1, 0.6);
  MatrixXd dir(2, 1);
  dir << 1, 0.4;
  Subspace v = span_subspace(dir);
  LadderParams params;
  params.eps0 = 0.25;
  params.levels = 4;
  VectorXd x = attractor_point(f, {0, 3, 1, 2, 0});
  DensityProfile lhs = f_estimate(mu, x, h, v, params);
  DensityProfile rhs = f_estimate(mu, x, MatrixXd::Identity(2, 2), rotate_subspace(h, v), params);
  for (size_t j = 0; j < lhs.eps.size(); ++j)
    CHECK(lhs.ratio[j] == doctest::Approx(rhs.ratio[j]).epsilon(1e-12));
}

TEST_CASE("f_estimate on the square marginal equals the one-dimensional profile") {
  // the x-marginal of the corner-square natural measure is the 1/3 Cantor measure
  Ifs square = corner_square_ifs(1.0 / 3.0);
  Ifs cantor = cantor_ifs(1.0 / 3.0);
  DiscreteMeasure mu2 = attractor_atoms(square, 6);
  DiscreteMeasure mu1 = attractor_atoms(cantor, 6);
  MatrixXd vertical(2, 1);
  vertical << 0, 1;
  Subspace v = span_subspace(vertical);
  LadderParams params;
  params.eps0 = 0.25;
  params.levels = 4;
  auto rng = make_stream(58, "marginal-profile");
  for (int trial = 0; trial < 8; ++trial) {
    VectorXd x2 = sample_attractor(square, rng);
    DensityProfile from_square = f_estimate(mu2, x2, MatrixXd::Identity(2, 2), v, params);
    DensityProfile from_line = density_profile(mu1, vec1(x2(0)), 1, params);
    for (size_t j = 0; j < from_square.eps.size(); ++j)
      CHECK(from_square.ratio[j] == doctest::Approx(from_line.ratio[j]).epsilon(1e-9));
  }
}

TEST_CASE("line_measure computes exact interval and block masses") {
  Ifs f = cantor_ifs(0.25);
  LineMeasure lm = line_measure(attractor_atoms(f, 10));
  CHECK(lm.total() == doctest::Approx(1.0).epsilon(1e-14));
  for (int k = 1; k <= 5; ++k)
    CHECK(lm.interval_mass(-1.0, std::pow(0.25, k)) == doctest::Approx(std::pow(0.5, k)).epsilon(1e-14));
  // restricted to the right half block
  CHECK(lm.interval_mass(-1, 2, 512, 1024) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(lm.interval_mass(0.0, 0.3, 512, 1024) == doctest::Approx(0.0));
}

TEST_CASE("product measure queries agree with the materialized product") {
  Ifs fa = cantor_ifs(0.25);
  Ifs fb = cantor_ifs(1.0 / 3.0);
  int da = 6, db = 5;
  ProductMeasure pm = product_cantor_measure(fa, da, fb, db);
  DiscreteMeasure flat = product_measure_flat(attractor_atoms(fa, da), attractor_atoms(fb, db));
  CHECK(std::abs(pm.total() - 1.0) < 1e-12);
  auto rng = make_stream(60, "product-vs-flat");

  for (int trial = 0; trial < 30; ++trial) {
    double zx = uniform_range(rng, -0.1, 1.1);
    double zy = uniform_range(rng, -0.1, 1.1);
    double r = uniform_range(rng, 0.005, 0.8);
    CHECK(pm.ball_mass(zx, zy, r) == doctest::Approx(ball_mass(flat, vec2(zx, zy), r)).epsilon(1e-12));
  }

  for (int trial = 0; trial < 30; ++trial) {
    double angle = uniform_range(rng, 0, M_PI);
    double ux = std::cos(angle), uy = std::sin(angle);
    double c = uniform_range(rng, -0.5, 1.5);
    double eps = uniform_range(rng, 0.005, 0.5);
    double direct = 0;
    for (int64_t i = 0; i < flat.size(); ++i) {
      double d = ux * flat.points(0, i) + uy * flat.points(1, i) - c;
      if (std::abs(d) <= eps) direct += flat.weights(i);
    }
    CHECK(pm.slab_mass(ux, uy, c, eps) == doctest::Approx(direct).epsilon(1e-11));
  }
}

TEST_CASE("product block masses are exact dyadic weights") {
  Ifs fa = cantor_ifs(0.25);
  Ifs fb = cantor_ifs(1.0 / 3.0);
  ProductMeasure pm = product_cantor_measure(fa, 10, fb, 10);
  auto rng = make_stream(62, "product-blocks");
  for (int trial = 0; trial < 30; ++trial) {
    int la = static_cast<int>(uniform_index(rng, 8));
    int lb = static_cast<int>(uniform_index(rng, 8));
    Word wa(la), wb(lb);
    for (auto& s : wa) s = static_cast<uint32_t>(uniform_index(rng, 2));
    for (auto& s : wb) s = static_cast<uint32_t>(uniform_index(rng, 2));
    int64_t xa = static_cast<int64_t>(word_index(wa, 2)) << (10 - la);
    int64_t xb = static_cast<int64_t>(word_index(wb, 2)) << (10 - lb);
    double mass = pm.block_mass(xa, xa + (int64_t(1) << (10 - la)), xb, xb + (int64_t(1) << (10 - lb)));
    CHECK(mass == doctest::Approx(std::pow(2.0, -la - lb)).epsilon(1e-13));
  }
}

TEST_CASE("product slab masses restricted to blocks match brute force") {
  Ifs fa = cantor_ifs(0.25);
  Ifs fb = cantor_ifs(1.0 / 3.0);
  int da = 6, db = 6;
  ProductMeasure pm = product_cantor_measure(fa, da, fb, db);
  DiscreteMeasure fla = attractor_atoms(fa, da);
  DiscreteMeasure flb = attractor_atoms(fb, db);
  auto rng = make_stream(64, "product-slab-blocks");
  for (int trial = 0; trial < 20; ++trial) {
    double angle = uniform_range(rng, 0, M_PI);
    double ux = std::cos(angle), uy = std::sin(angle);
    double c = uniform_range(rng, 0, 1.0);
    double eps = uniform_range(rng, 0.01, 0.3);
    int la = 1 + static_cast<int>(uniform_index(rng, 3));
    int lb = 1 + static_cast<int>(uniform_index(rng, 3));
    int64_t xa = static_cast<int64_t>(uniform_index(rng, uint64_t(1) << la)) << (da - la);
    int64_t xb = static_cast<int64_t>(uniform_index(rng, uint64_t(1) << lb)) << (db - lb);
    int64_t xe = xa + (int64_t(1) << (da - la));
    int64_t ye = xb + (int64_t(1) << (db - lb));
    double brute = 0;
    for (int64_t i = xa; i < xe; ++i)
      for (int64_t j = xb; j < ye; ++j) {
        double d = ux * fla.points(0, i) + uy * flb.points(0, j) - c;
        if (std::abs(d) <= eps) brute += fla.weights(i) * flb.weights(j);
      }
    CHECK(pm.slab_mass_blocks(ux, uy, c, eps, xa, xe, xb, ye) == doctest::Approx(brute).epsilon(1e-11));
  }
}

TEST_CASE("product direction profile equals the flat pushforward profile") {
  Ifs fa = cantor_ifs(0.25);
  Ifs fb = cantor_ifs(1.0 / 3.0);
  ProductMeasure pm = product_cantor_measure(fa, 6, fb, 6);
  DiscreteMeasure flat = product_measure_flat(attractor_atoms(fa, 6), attractor_atoms(fb, 6));
  auto rng = make_stream(66, "product-profile");
  LadderParams params;
  params.eps0 = 0.3;
  params.levels = 5;
  for (int trial = 0; trial < 10; ++trial) {
    MatrixXd dir(2, 1);
    double angle = uniform_range(rng, 0, M_PI);
    dir << std::cos(angle), std::sin(angle);
    Subspace v = span_subspace(dir);
    Eigen::Vector2d z(uniform_range(rng, 0, 1), uniform_range(rng, 0, 1));
    DensityProfile lhs = product_direction_profile(pm, z, v, params);
    DensityProfile rhs = density_profile(pushforward_project(flat, v), project_coords(v, z), 1, params);
    REQUIRE(lhs.eps.size() == rhs.eps.size());
    for (size_t j = 0; j < lhs.eps.size(); ++j)
      CHECK(lhs.ratio[j] == doctest::Approx(rhs.ratio[j]).epsilon(1e-10));
  }
}

TEST_CASE("frostman bound at the corner matches the hand-computed value") {
  Ifs fa = cantor_ifs(0.25);
  Ifs fb = cantor_ifs(1.0 / 3.0);
  ProductMeasure pm = product_cantor_measure(fa, 10, fb, 10);
  double da = std::log(2.0) / std::log(4.0);
  double db = std::log(2.0) / std::log(3.0);
  double delta = 1.0 - 2.0 / 3.0;
  double radius = delta * std::pow(0.25, 3);
  double mass = pm.ball_mass(0.0, 0.0, radius);
  // independent brute-force mass over the materialized atoms
  DiscreteMeasure flat = product_measure_flat(attractor_atoms(fa, 10), attractor_atoms(fb, 10));
  double brute = 0;
  for (int64_t i = 0; i < flat.size(); ++i)
    if ((flat.points.col(i) - vec2(0, 0)).norm() <= radius) brute += flat.weights(i);
  CHECK(mass == doctest::Approx(brute).epsilon(1e-12));
  CHECK(mass <= 2.0 * std::pow(0.25, 3 * (da + db)) + 1e-15);
}

TEST_CASE("frostman_check reports no violations for the product Cantor measure") {
  Ifs fa = cantor_ifs(0.25);
  Ifs fb = cantor_ifs(1.0 / 3.0);
  ProductMeasure pm = product_cantor_measure(fa, 12, fb, 12);
  auto rng = make_stream(68, "frostman");
  FrostmanReport rep = frostman_check(pm, fa, fb, 6, 100, rng);
  CHECK(rep.violations == 0);
  CHECK(rep.max_ratio <= 1.0 + 1e-9);
  CHECK(rep.rows.size() == 100 * 7);
}
