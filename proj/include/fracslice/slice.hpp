#pragma once

#include <string>
#include <vector>

#include "fracslice/dynamics.hpp"
#include "fracslice/measure.hpp"

namespace fracslice {

class slice_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Conditional-mass estimate with its convergence report: `value` is the
/// slab ratio at the finest trusted scale, `variation` the largest absolute
/// deviation from it across the last (up to three) trusted scales.
struct MassEstimate {
  double value = 0;
  double variation = 0;
  double eps = 0;      // scale the value was read at
  int used_level = -1; // ladder index of that scale
};

/// Slab-ratio estimate of the conditional mass of the cylinder K_w on the
/// slice through x along v: mass(K_w within the slab of half-width eps
/// around the slice) / mass(the slab), extrapolated down the scale ladder.
/// Throws when the slab carries no mass at a trusted scale (x off-support)
/// or when every ladder scale sits below the resolution guard.
MassEstimate conditional_mass_direct(const DiscreteMeasure& mu, const Eigen::VectorXd& x,
                                     const Subspace& v, const Word& w,
                                     const LadderParams& params = {});

/// Same estimator on a factorized plane measure; the cylinder is the product
/// of the depth-|wx| x-word and the depth-|wy| y-word.
MassEstimate conditional_mass_direct(const ProductMeasure& pm, const Eigen::Vector2d& z,
                                     const Subspace& v, const Word& wx, const Word& wy,
                                     const LadderParams& params = {});

/// Conditional mass of the depth-k cylinder around x by the density
/// recursion: F(x,h)^-1 * r_w^(s-m) * F(k-step zoom of (x,h)), with the
/// lower density hat as F at both ends.  Throws recursion-unavailable when
/// either density estimate vanishes or is unusable.
MassEstimate conditional_mass_recursion(const Ifs& f, const DiscreteMeasure& mu,
                                        const Eigen::VectorXd& x, const Eigen::MatrixXd& h,
                                        const Subspace& v, int k, const LadderParams& params = {});

enum class MassMethod { direct, recursion };

/// Symbols concatenated as digits; dot-separated once an alphabet goes past
/// ten symbols.
std::string word_string(const Word& w, uint32_t branching);

struct SliceMassEntry {
  Word word;
  double mass = 0;
  double variation = 0;
};

/// Conditional measure of a slice, tabulated on cylinder words.  The direct
/// method fills the full tree to `depth`; the recursion method fills the
/// chain of cylinders containing the base point.
struct SliceMeasure {
  Eigen::VectorXd base_x;
  Subspace subspace;
  MassMethod method = MassMethod::direct;
  uint32_t branching = 0;
  std::vector<SliceMassEntry> entries;
};

SliceMeasure slice_measure_direct(const DiscreteMeasure& mu, const Eigen::VectorXd& x,
                                  const Subspace& v, int depth, const LadderParams& params = {});
SliceMeasure slice_measure_recursion(const Ifs& f, const DiscreteMeasure& mu,
                                     const Eigen::VectorXd& x, const Eigen::MatrixXd& h,
                                     const Subspace& v, int depth,
                                     const LadderParams& params = {});

/// Columns: word, mass, method, variation.
void write_slice_csv(const SliceMeasure& sm, const std::string& path);

/// One step of a density trace.  `scale` is the cylinder contraction r_w for
/// zoom traces and the cell mass-to-length factor 2^(-l-k) * b^(-k) for
/// product traces; `word` is the accumulated coding prefix ("x|y" for
/// products).  Failed steps keep ok = false and carry the reason in `note`.
struct TraceStep {
  int k = 0;
  Eigen::VectorXd coords;
  std::string word;
  double scale = 1;
  double f_lower = 0, f_upper = 0;
  bool ok = false;
  std::string note;
};

struct OrbitTrace {
  std::vector<TraceStep> steps;
  double running_max = 0;
  double running_min = 0;
  int failures = 0;
};

/// Density estimates along the explicit zoom orbit of `start`.  Estimation
/// failures are recorded per step; a coding failure ends the orbit early
/// (explicit states lose precision at rate 1/ratio per step, so deep traces
/// of strongly contracting systems degrade before `steps` runs out).
OrbitTrace density_trace(const Ifs& f, const DiscreteMeasure& mu, const SkewState& start,
                         const Subspace& v, int steps, const LadderParams& params = {});

/// Density estimates along a fresh invariant-measure orbit of the coupled
/// product system, evaluated against the rotating direction family.
OrbitTrace product_density_trace(const ProductSystem& sys, const ProductMeasure& pm,
                                 std::mt19937_64& rng, int steps, const LadderParams& params = {});

/// Density estimates along a symbolically driven orbit of the skew product.
/// The state is rematerialized from the coding each step, so the horizon is
/// not limited by the precision loss of explicit stepping.
OrbitTrace skew_density_trace(const SkewSystem& sys, const DiscreteMeasure& mu, const Subspace& v,
                              std::mt19937_64& rng, int steps, const LadderParams& params = {});

enum class Verdict { h_positive, h_zero, p_infinite, inconclusive };

/// "H-positive-evidence", "H-zero-evidence", "P-infinite-evidence",
/// "inconclusive".
std::string verdict_name(Verdict v);

struct ClassifyParams {
  double blowup = 10;         // extreme-to-median factor that counts as blown up
  int min_steps = 30;
  double trend_margin = 0.05; // relative move past the early extreme that counts as a trend
};

struct Classification {
  Verdict verdict = Verdict::inconclusive;
  double median = 0, max_value = 0, min_value = 0;
  bool max_growing = false;  // last third pushed past the earlier max by the margin
  bool min_falling = false;
  std::string note;
};

/// Pure function of the trace and thresholds: a blown-up, still-growing max
/// is evidence the density is unbounded on the orbit (slice measure zero); a
/// collapsed, still-falling min is evidence 1/F is unbounded (infinite
/// packing measure); both extremes plateauing supports a positive finite
/// slice measure.
Classification classify(const OrbitTrace& trace, const ClassifyParams& params = {});

/// Lower bound on the conditional mass of the renormalized product cylinder
/// after k steps from (z, t0), against the direct slab estimate of the same
/// cylinder.  `holds` reports direct >= lower - slack with the slack set
/// from the direct estimator's reported variation plus a quarter of the
/// bound.
struct CylinderBound {
  double lower = 0;
  double direct = 0;
  double slack = 0;
  int l = 0;  // x refinements among the k steps
  bool holds = false;
  MassEstimate direct_report;
};

CylinderBound product_cylinder_lower_bound(const ProductSystem& sys, const ProductMeasure& pm,
                                           const Eigen::Vector2d& z, double t0, int k,
                                           const LadderParams& params = {});

/// Box-counting fit for the slice through x along v: counts section
/// cylinders (first cylinder with hull radius <= eps) meeting the
/// radius-matched slab around the slice, for eps = radius * 2^-j,
/// j = j_min..j_max; `slope` is the least-squares slope of log count vs
/// -log eps with the two coarsest scales dropped.  Throws when the slice
/// misses every cell at some scale.
struct BoxCountFit {
  std::vector<double> eps;
  std::vector<int64_t> counts;
  double slope = 0;
};

BoxCountFit slice_box_dimension(const Ifs& f, const Eigen::VectorXd& x, const Subspace& v,
                                int j_min, int j_max);

/// Same count over the product of two Cantor factors without materializing
/// the plane set: per scale, x-section cells are intersected with the slab
/// and matching y-section cells are counted by binary search.
BoxCountFit product_slice_box_dimension(const Ifs& fa, const Ifs& fb, const Eigen::Vector2d& z,
                                        const Subspace& v, int j_min, int j_max);

}  // namespace fracslice
