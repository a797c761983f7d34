#pragma once

#include <cstdint>
#include <vector>

#include "fracslice/group.hpp"
#include "fracslice/ifs.hpp"

namespace fracslice {

class measure_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr uint64_t kAtomCap = uint64_t(1) << 24;

/// Weighted atoms approximating a measure.  `resolution` bounds the diameter
/// of the cell each atom stands for.  When the atoms enumerate the depth
/// `tree_depth` words of an iterated system in lexicographic order,
/// `branching` is set and cylinder masses become contiguous index blocks.
struct DiscreteMeasure {
  Eigen::MatrixXd points;   // ambient x count, one column per atom
  Eigen::VectorXd weights;
  double resolution = 0;
  uint32_t branching = 0;
  int tree_depth = 0;
  Eigen::VectorXd bbox_min, bbox_max;

  int ambient() const { return static_cast<int>(points.rows()); }
  int64_t size() const { return points.cols(); }
  double total() const { return weights.sum(); }
};

/// Depth-d cylinder discretization: one atom phi_w(anchor) of mass p_w per
/// word of length `depth`.
DiscreteMeasure attractor_atoms(const Ifs& f, int depth, uint64_t cap = kAtomCap);

/// Index block [begin, end) of the atoms lying in the cylinder of `w`.
std::pair<int64_t, int64_t> cylinder_block(const DiscreteMeasure& mu, const Word& w);

/// Image measure under the orthogonal projection onto V_perp, expressed in
/// the V_perp coordinates (an isometry, so balls map to balls).
DiscreteMeasure pushforward_project(const DiscreteMeasure& mu, const Subspace& v);

/// Mass of the closed ball B(center, radius).
double ball_mass(const DiscreteMeasure& mu, const Eigen::VectorXd& center, double radius);

/// Dyadic scale ladder eps_j = eps0 * 2^-j, j = 0..levels-1.  eps0 = 0 picks
/// a quarter of the (projected) support extent.  Scales below
/// guard * resolution are reported but flagged outside the trusted window.
struct LadderParams {
  double eps0 = 0;
  int levels = 12;
  double guard = 10;
};

struct DensityProfile {
  std::vector<double> eps;
  std::vector<double> ratio;     // mass(B(x, eps)) / (2 eps)^exponent
  std::vector<char> in_window;
  int exponent = 1;
  double theta_lower_hat = 0;    // min ratio over the trusted window
  double theta_upper_hat = 0;    // max ratio over the trusted window
};

DensityProfile density_profile(const DiscreteMeasure& nu, const Eigen::VectorXd& x, int exponent,
                               const LadderParams& params);

/// Working estimate of the slice-density function: the density profile of mu
/// projected onto (h V)_perp, evaluated at the projection of x.  The lower
/// hat is the working value wherever the density function is consumed.
DensityProfile f_estimate(const DiscreteMeasure& mu, const Eigen::VectorXd& x,
                          const Eigen::MatrixXd& h, const Subspace& v, const LadderParams& params);

/// Ball masses around several centers at every ladder scale in one pass over
/// projected atoms; masses[c][j] corresponds to centers column c, scale j.
std::vector<std::vector<double>> projected_ladder_masses(const DiscreteMeasure& mu,
                                                         const Eigen::MatrixXd& dirs,
                                                         const Eigen::MatrixXd& centers,
                                                         const std::vector<double>& eps);

/// Sorted 1-d measure with prefix sums; interval masses cost one binary
/// search and stay exact for dyadic weights.
struct LineMeasure {
  std::vector<double> position;  // ascending
  std::vector<double> prefix;    // size + 1 entries
  double resolution = 0;
  uint32_t branching = 0;
  int tree_depth = 0;

  int64_t size() const { return static_cast<int64_t>(position.size()); }
  double total() const { return prefix.back(); }
  double interval_mass(double lo, double hi) const;
  /// Restricted to atom indexes [block_begin, block_end).
  double interval_mass(double lo, double hi, int64_t block_begin, int64_t block_end) const;
};

LineMeasure line_measure(const DiscreteMeasure& mu_1d);

/// Product of two line measures on the plane (x-factor times y-factor),
/// queried without materializing the product atoms.
struct ProductMeasure {
  LineMeasure x, y;
  double resolution = 0;

  double total() const { return x.total() * y.total(); }
  double ball_mass(double zx, double zy, double r) const;
  /// Mass of the slab |dir . p - c| <= eps, optionally restricted to the
  /// sub-cylinder given by word blocks on each factor.
  double slab_mass(double dir_x, double dir_y, double c, double eps) const;
  double slab_mass_blocks(double dir_x, double dir_y, double c, double eps, int64_t xb, int64_t xe,
                          int64_t yb, int64_t ye) const;
  double block_mass(int64_t xb, int64_t xe, int64_t yb, int64_t ye) const;
};

ProductMeasure product_cantor_measure(const Ifs& fa, int depth_a, const Ifs& fb, int depth_b);

/// Materialized product (for cross-checks at small sizes).
DiscreteMeasure product_measure_flat(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                     uint64_t cap = kAtomCap);

/// Density profile of the product measure projected onto the line spanned by
/// v.basis_perp, evaluated at the projection of z.
DensityProfile product_direction_profile(const ProductMeasure& mu, const Eigen::Vector2d& z,
                                         const Subspace& v, const LadderParams& params);

/// Ball-growth bound check for the product of two Cantor measures with
/// ratios a <= b: mass(B(z, (1-2b) a^k)) <= 2 a^(k (d_a + d_b)).  The
/// discrete mass is compared at an effective scale enlarged by the atom
/// resolution, so a pass certifies the bound for the discretized measure.
struct FrostmanRow {
  double zx, zy;
  int k;
  double radius, mass, bound, ratio;
};
struct FrostmanReport {
  std::vector<FrostmanRow> rows;
  double max_ratio = 0;
  int violations = 0;
};

FrostmanReport frostman_check(const ProductMeasure& mu, const Ifs& fa, const Ifs& fb, int k_max,
                              int samples, std::mt19937_64& rng);

}  // namespace fracslice
