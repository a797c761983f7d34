#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracslice/group.hpp"
#include "fracslice/rng.hpp"

namespace fracslice {

class ifs_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite words over the map alphabet, symbols 0-based.
using Word = std::vector<uint32_t>;

std::string word_string(const Word& w);  // "0110..."; empty word prints "-"
uint64_t word_index(const Word& w, uint32_t branching);
Word index_word(uint64_t index, int depth, uint32_t branching);

/// x -> ratio * rotation * x + translation with ratio in (0,1) and an
/// orthogonal rotation part.
struct SimilarityMap {
  double ratio = 0;
  Eigen::MatrixXd rotation;
  Eigen::VectorXd translation;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd invert(const Eigen::VectorXd& x) const;
  Eigen::VectorXd fixed_point() const;
  SimilarityMap after(const SimilarityMap& inner) const;  // this . inner
};

SimilarityMap similarity_map(double ratio, const Eigen::MatrixXd& rotation,
                             const Eigen::VectorXd& translation);

/// Validated system with strong separation, plus the derived constants the
/// estimators need.  `center`/`radius` give a certified bounding ball of the
/// attractor, so phi_w(center) with radius r_w * radius always contains the
/// cylinder K_w.
struct Ifs {
  std::vector<SimilarityMap> maps;
  int ambient = 0;
  double dimension = 0;           // Moran exponent s
  std::vector<double> weights;    // ratio^s, the natural measure weights
  double separation = 0;          // certified lower bound on the level-1 gap
  double min_ratio = 0;
  double diameter = 0;            // certified upper bound on diam(attractor)
  Eigen::VectorXd center;
  double radius = 0;
  Eigen::VectorXd bbox_min, bbox_max;  // certified outer hull box
  Eigen::VectorXd anchor;         // fixed point of maps[0], a point of the attractor

  uint32_t branching() const { return static_cast<uint32_t>(maps.size()); }
};

/// Unique s >= 0 with sum ratio_i^s = 1, found by bisection on [0, 64] down
/// to residual 1e-13.
double similarity_dimension(const std::vector<double>& ratios);

/// Validates the maps, solves for the dimension and weights, computes the
/// bounding ball, diameter and certified separation.  Throws ifs_error when
/// the maps overlap (no strong separation) or validation fails.
Ifs build_ifs(std::vector<SimilarityMap> maps);

/// Certified interval around the distance between the cylinders K_a and K_b,
/// refined until upper - lower <= rel_gap * lower (or the node budget runs
/// out, which throws).
struct DistanceBound {
  double lower = 0;
  double upper = 0;
};
DistanceBound cylinder_distance(const Ifs& f, const Word& a, const Word& b, double rel_gap = 0.01,
                                size_t budget = size_t(1) << 18);

/// Smallest pairwise distance between level-1 cylinder images, as a certified
/// lower bound within 1% of the true gap.
double separation_constant(const Ifs& f);

SimilarityMap word_map(const Ifs& f, const Word& w);
double word_ratio(const Ifs& f, const Word& w);

/// First `depth` symbols of the coding of x.  Points within
/// separation * r_w / 4 of a cylinder are snapped to it; anything further
/// from every cylinder is rejected.
Word code_of_point(const Ifs& f, const Eigen::VectorXd& x, int depth);

/// Certified distance interval from a point to the cylinder K_w.
DistanceBound point_cylinder_distance(const Ifs& f, const Eigen::VectorXd& x, const Word& w,
                                      double abs_gap, size_t budget = size_t(1) << 18);

Eigen::VectorXd attractor_point(const Ifs& f, const Word& w);  // phi_w(anchor)
Word sample_word(const Ifs& f, std::mt19937_64& rng, int depth);
Eigen::VectorXd sample_attractor(const Ifs& f, std::mt19937_64& rng, int depth = 40);

/// Two maps t -> rho t and t -> rho t + (1 - rho) on the line, rho < 1/2.
Ifs cantor_ifs(double rho);
/// Four corner maps of the unit square, equal ratio < 1/2.
Ifs corner_square_ifs(double ratio);
/// Eight corner maps of the unit cube, equal ratio < 1/2.
Ifs corner_cube_ifs(double ratio);

/// Text format: ambient_dim line, then one `map` line per map carrying
/// ratio / row-major rotation / translation.
Ifs load_ifs(const std::string& path);
void save_ifs(const Ifs& f, const std::string& path);

}  // namespace fracslice
