#include "doctest.h"
#include "fracslice/ifs.hpp"
#include "stat_utils.hpp"

#include <cmath>
#include <cstdio>

using namespace fracslice;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec1(double x) {
  VectorXd v(1);
  v << x;
  return v;
}

// Independent oracle: enumerate all depth-D anchor points of each level-1
// cylinder and take the smallest cross distance.  This upper-bounds the true
// gap and converges to it from above as D grows.
double brute_force_separation(const Ifs& f, int depth) {
  uint32_t b = f.branching();
  uint64_t per = 1;
  for (int i = 1; i < depth; ++i) per *= b;
  std::vector<std::vector<VectorXd>> clouds(b);
  for (uint32_t first = 0; first < b; ++first)
    for (uint64_t rest = 0; rest < per; ++rest) {
      Word w = index_word(rest, depth - 1, b);
      w.insert(w.begin(), first);
      clouds[first].push_back(attractor_point(f, w));
    }
  double best = std::numeric_limits<double>::infinity();
  for (uint32_t i = 0; i < b; ++i)
    for (uint32_t j = i + 1; j < b; ++j)
      for (const auto& p : clouds[i])
        for (const auto& q : clouds[j]) best = std::min(best, (p - q).norm());
  return best;
}

}  // namespace

TEST_CASE("similarity_dimension matches closed forms") {
  CHECK(similarity_dimension({0.5, 0.5}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(similarity_dimension({0.25, 0.25}) - 0.5) < 1e-12);
  double third = 1.0 / 3.0;
  CHECK(std::abs(similarity_dimension({third, third}) - std::log(2.0) / std::log(3.0)) < 1e-12);
  // four maps of ratio 1/3: s = log 4 / log 3
  CHECK(std::abs(similarity_dimension({third, third, third, third}) - std::log(4.0) / std::log(3.0)) <
        1e-12);
  CHECK(similarity_dimension({0.9}) == doctest::Approx(0.0));
}

TEST_CASE("similarity_dimension satisfies the Moran equation on random inputs") {
  auto rng = make_stream(30, "moran-random");
  for (int trial = 0; trial < 100; ++trial) {
    int k = 2 + static_cast<int>(uniform_index(rng, 6));
    std::vector<double> ratios(k);
    for (auto& r : ratios) r = uniform_range(rng, 0.05, 0.8);
    double s = similarity_dimension(ratios);
    double sum = 0;
    for (double r : ratios) sum += std::pow(r, s);
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("similarity_dimension rejects bad ratios") {
  CHECK_THROWS_AS(similarity_dimension({}), ifs_error);
  CHECK_THROWS_AS(similarity_dimension({0.5, 1.0}), ifs_error);
  CHECK_THROWS_AS(similarity_dimension({0.5, 0.0}), ifs_error);
}

TEST_CASE("build_ifs derives the middle-half Cantor constants") {
  Ifs f = cantor_ifs(0.25);
  CHECK(f.ambient == 1);
  CHECK(std::abs(f.dimension - 0.5) < 1e-12);
  CHECK(f.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.weights[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.anchor(0) == doctest::Approx(0.0));
  // level-1 images are [0, 1/4] and [3/4, 1]: the gap is exactly 1/2
  CHECK(f.separation <= 0.5 + 1e-12);
  CHECK(f.separation > 0.5 * 0.99);
  // the attractor contains 0 and 1, so the diameter is exactly 1
  CHECK(f.diameter >= 1.0 - 1e-12);
  CHECK(f.diameter < 1.02);
  CHECK(f.min_ratio == doctest::Approx(0.25));
  // bounding ball really covers sampled points
  auto rng = make_stream(32, "cantor-cover");
  for (int i = 0; i < 200; ++i) {
    VectorXd x = sample_attractor(f, rng);
    CHECK((x - f.center).norm() <= f.radius + 1e-9);
  }
}

TEST_CASE("build_ifs separation agrees with the brute-force oracle") {
  Ifs quarter = cantor_ifs(0.25);
  double oracle_q = brute_force_separation(quarter, 12);
  CHECK(oracle_q == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(quarter.separation <= oracle_q + 1e-12);
  CHECK(quarter.separation >= 0.99 * 0.5 - 1e-12);

  Ifs third = cantor_ifs(1.0 / 3.0);
  double oracle_t = brute_force_separation(third, 12);
  CHECK(oracle_t == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
  CHECK(third.separation <= oracle_t + 1e-12);
  CHECK(third.separation >= 0.99 / 3.0 - 1e-12);

  Ifs square = corner_square_ifs(1.0 / 3.0);
  CHECK(std::abs(square.dimension - std::log(4.0) / std::log(3.0)) < 1e-12);
  double oracle_s = brute_force_separation(square, 6);
  // anchor clouds overestimate by at most one depth-6 cell diameter
  CHECK(oracle_s >= 1.0 / 3.0 - 1e-12);
  CHECK(oracle_s <= 1.0 / 3.0 + 2.0 * std::pow(3.0, -6) * std::sqrt(2.0));
  CHECK(square.separation <= oracle_s + 1e-12);
  CHECK(square.separation >= 0.99 / 3.0 - 1e-12);
  CHECK(square.diameter >= std::sqrt(2.0) - 1e-9);
  CHECK(square.diameter < std::sqrt(2.0) * 1.02);
}

TEST_CASE("build_ifs rejects overlapping maps") {
  std::vector<SimilarityMap> maps;
  maps.push_back(similarity_map(0.6, MatrixXd::Identity(1, 1), vec1(0.0)));
  maps.push_back(similarity_map(0.6, MatrixXd::Identity(1, 1), vec1(0.4)));
  CHECK_THROWS_AS(build_ifs(maps), ifs_error);
}

TEST_CASE("build_ifs rejects malformed systems") {
  std::vector<SimilarityMap> one;
  one.push_back(similarity_map(0.5, MatrixXd::Identity(1, 1), vec1(0.0)));
  CHECK_THROWS_AS(build_ifs(one), ifs_error);

  std::vector<SimilarityMap> bad_ratio;
  bad_ratio.push_back(similarity_map(1.2, MatrixXd::Identity(1, 1), vec1(0.0)));
  bad_ratio.push_back(similarity_map(0.25, MatrixXd::Identity(1, 1), vec1(0.75)));
  CHECK_THROWS_AS(build_ifs(bad_ratio), ifs_error);

  MatrixXd skew(2, 2);
  skew << 1, 0.5, 0, 1;
  std::vector<SimilarityMap> bad_rot;
  Eigen::VectorXd zero2 = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd shift2(2);
  shift2 << 0.75, 0;
  bad_rot.push_back(similarity_map(0.25, skew, zero2));
  bad_rot.push_back(similarity_map(0.25, MatrixXd::Identity(2, 2), shift2));
  CHECK_THROWS_AS(build_ifs(bad_rot), ifs_error);
}

TEST_CASE("corner cube constants") {
  Ifs cube = corner_cube_ifs(0.45);
  CHECK(cube.ambient == 3);
  CHECK(cube.branching() == 8);
  CHECK(std::abs(cube.dimension - 3.0 * std::log(2.0) / std::log(1.0 / 0.45)) < 1e-12);
  CHECK(cube.dimension > 2.0);
  // adjacent sub-cubes differ in one axis: gap = 1 - 2*0.45
  CHECK(cube.separation <= 0.1 + 1e-9);
  CHECK(cube.separation >= 0.99 * 0.1 - 1e-9);
  CHECK(cube.diameter >= std::sqrt(3.0) - 1e-9);
  CHECK(cube.diameter < std::sqrt(3.0) * 1.06);
}

TEST_CASE("word helpers round-trip") {
  Word w{1, 0, 2, 3};
  CHECK(word_index(w, 4) == 1 * 64 + 0 * 16 + 2 * 4 + 3);
  CHECK(index_word(word_index(w, 4), 4, 4) == w);
  CHECK(word_string(w) == "1023");
  CHECK(word_string({}) == "-");
}

TEST_CASE("word_map composes in left-to-right application order") {
  Ifs f = cantor_ifs(0.25);
  Word w{1, 0};
  SimilarityMap m = word_map(f, w);
  // phi_10 = phi_1 after phi_0 applied to the argument last
  VectorXd x = vec1(0.3);
  VectorXd expect = f.maps[1].apply(f.maps[0].apply(x));
  CHECK((m.apply(x) - expect).norm() < 1e-14);
  CHECK(word_ratio(f, w) == doctest::Approx(0.0625));
  CHECK(word_ratio(f, {}) == doctest::Approx(1.0));
}

TEST_CASE("code_of_point recovers hand-computed codings") {
  Ifs f = cantor_ifs(0.25);
  CHECK(code_of_point(f, vec1(0.0), 3) == Word{0, 0, 0});
  CHECK(code_of_point(f, vec1(1.0), 2) == Word{1, 1});
  // 0.8 lies in the image of map 1 then map 0: [3/4, 13/16]
  CHECK(code_of_point(f, vec1(0.8), 2) == Word{1, 0});
  // the central gap is not resolvable
  CHECK_THROWS_AS(code_of_point(f, vec1(0.5), 1), ifs_error);
}

TEST_CASE("code_of_point inverts attractor_point on random words") {
  auto rng = make_stream(34, "coding-roundtrip");
  for (const Ifs& f : {cantor_ifs(0.25), cantor_ifs(1.0 / 3.0), corner_square_ifs(1.0 / 3.0)}) {
    for (int trial = 0; trial < 40; ++trial) {
      int depth = 1 + static_cast<int>(uniform_index(rng, 8));
      Word w = sample_word(f, rng, depth);
      CHECK(code_of_point(f, attractor_point(f, w), depth) == w);
    }
  }
}

TEST_CASE("code_of_point snaps nearby points and is prefix-stable") {
  Ifs f = cantor_ifs(0.25);
  // within separation * r_w / 4 of the cylinder at 0
  double tol = f.separation * 0.25 / 4.0;
  CHECK(code_of_point(f, vec1(-0.5 * tol), 1) == Word{0});
  auto rng = make_stream(36, "coding-prefix");
  for (int trial = 0; trial < 30; ++trial) {
    VectorXd x = sample_attractor(f, rng);
    Word shallow = code_of_point(f, x, 3);
    Word deep = code_of_point(f, x, 6);
    CHECK(Word(deep.begin(), deep.begin() + 3) == shallow);
  }
}

TEST_CASE("cylinder_distance brackets the level-1 gap") {
  Ifs f = cantor_ifs(0.25);
  DistanceBound d = cylinder_distance(f, {0}, {1});
  CHECK(d.lower <= 0.5);
  CHECK(d.upper >= 0.5);
  CHECK(d.upper - d.lower <= 0.01 * d.lower + 1e-12);
  // deeper pair: K_00 = [0, 1/16], K_01 = [3/16, 1/4], gap 1/8
  DistanceBound d2 = cylinder_distance(f, {0, 0}, {0, 1});
  CHECK(d2.lower <= 0.125);
  CHECK(d2.upper >= 0.125);
  CHECK(d2.upper - d2.lower <= 0.01 * d2.lower + 1e-12);
}

TEST_CASE("point_cylinder_distance brackets hand values") {
  Ifs f = cantor_ifs(0.25);
  DistanceBound d = point_cylinder_distance(f, vec1(0.5), {1}, 1e-6);
  // distance from 0.5 to [3/4, 1] is 1/4
  CHECK(d.lower <= 0.25 + 1e-12);
  CHECK(d.upper >= 0.25 - 1e-12);
  CHECK(d.upper - d.lower <= 1e-6 + 1e-12);
  DistanceBound inside = point_cylinder_distance(f, vec1(1.0), {1}, 1e-6);
  CHECK(inside.upper <= 1e-6);
}

TEST_CASE("sampled attractor points stay on the attractor") {
  Ifs f = corner_square_ifs(1.0 / 3.0);
  auto rng = make_stream(38, "sample-on-set");
  for (int i = 0; i < 50; ++i) {
    VectorXd x = sample_attractor(f, rng);
    // codable to depth 6 without snapping failure
    CHECK(code_of_point(f, x, 6).size() == 6);
  }
}

TEST_CASE("sample_word matches the natural weights") {
  Ifs f = cantor_ifs(0.25);
  auto rng = make_stream(40, "word-weights");
  std::vector<int64_t> counts(2, 0);
  const int n = 40000;
  for (int i = 0; i < n; ++i) ++counts[sample_word(f, rng, 1)[0]];
  CHECK(testutil::chi2_counts_pvalue(counts, {n * 0.5, n * 0.5}) > 0.001);
}

TEST_CASE("ifs file round-trip preserves the system") {
  Ifs f = corner_square_ifs(1.0 / 3.0);
  std::string path = "roundtrip_test.ifs";
  save_ifs(f, path);
  Ifs g = load_ifs(path);
  REQUIRE(g.maps.size() == f.maps.size());
  CHECK(g.ambient == f.ambient);
  CHECK(std::abs(g.dimension - f.dimension) < 1e-12);
  CHECK(std::abs(g.separation - f.separation) < 1e-9);
  for (size_t i = 0; i < f.maps.size(); ++i) {
    CHECK(std::abs(g.maps[i].ratio - f.maps[i].ratio) < 1e-15);
    CHECK((g.maps[i].rotation - f.maps[i].rotation).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((g.maps[i].translation - f.maps[i].translation).cwiseAbs().maxCoeff() < 1e-15);
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_ifs("missing_file.ifs"), ifs_error);
}

TEST_CASE("a rotated system builds and codes correctly") {
  // two maps on the plane, one with a quarter turn
  MatrixXd quarter = plane_rotation(2, 0, 1, M_PI / 2);
  Eigen::VectorXd zero2 = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd shift(2);
  shift << 0.8, 0;
  std::vector<SimilarityMap> maps;
  maps.push_back(similarity_map(0.2, quarter, zero2));
  maps.push_back(similarity_map(0.2, MatrixXd::Identity(2, 2), shift));
  Ifs f = build_ifs(maps);
  CHECK(f.separation > 0);
  auto rng = make_stream(42, "rotated");
  for (int trial = 0; trial < 20; ++trial) {
    Word w = sample_word(f, rng, 5);
    CHECK(code_of_point(f, attractor_point(f, w), 5) == w);
  }
}
