#pragma once

#include <functional>

#include "fracslice/group.hpp"
#include "fracslice/ifs.hpp"

namespace fracslice {

class dynamics_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Magnification dynamics on attractor x rotation-closure.  One step zooms
/// into the level-1 cylinder of x and undoes its rotation on the group
/// coordinate.
struct SkewSystem {
  Ifs f;
  RotationGroup group;  // closure of the map rotations
};

SkewSystem make_skew_system(const Ifs& f, size_t element_cap = 100000);

struct SkewState {
  Eigen::VectorXd x;
  Eigen::MatrixXd h;
};

/// One zoom step on an explicit state.  Each step multiplies coordinate
/// error by 1/ratio, so explicit orbits are trustworthy only for a few
/// dozen steps; long-horizon statistics go through SkewOrbit instead.
SkewState step_skew(const SkewSystem& sys, const SkewState& s);

/// k steps at once: codes x to depth k, then peels the inverse maps off in
/// word order (the same composition the stepwise orbit applies).  The group
/// part is the transposed word rotation applied to h.
SkewState skew_power(const SkewSystem& sys, const SkewState& s, int k);

/// Stationary start: x from the natural measure, h Haar on the closure.
SkewState sample_skew_state(const SkewSystem& sys, std::mt19937_64& rng, int depth = 40);

/// Invariant-measure orbit generated on the symbol level: the state is
/// materialized from a sliding window of natural-measure symbols, so
/// arbitrarily long orbits never accumulate magnification error.
class SkewOrbit {
 public:
  SkewOrbit(const SkewSystem& sys, std::mt19937_64& rng, int window = 40);
  SkewState state() const;
  Word word(int depth) const;  // leading symbols of the current state
  const Eigen::MatrixXd& h() const { return h_; }
  void advance();

 private:
  const SkewSystem* sys_;
  std::vector<uint32_t> window_;  // ring buffer
  size_t head_ = 0;
  Eigen::MatrixXd h_;
  std::mt19937_64 rng_;
  int64_t steps_ = 0;
};

/// Two Cantor factors with contraction a < b coupled to the rotation
/// t -> t + alpha (mod 1), alpha = log b / log a; the x factor refines only
/// when the rotation wraps.  tau scales the direction family
/// V^t = span(tau a^t, -1).
struct ProductSystem {
  Ifs fa, fb;
  double a = 0, b = 0;
  double da = 0, db = 0;        // factor dimensions
  double alpha = 0, tau = 1;
  double eta = 0;               // da + db - 1
  double rational_gap = 0;      // min |alpha - p/q| over q <= 64
  int rational_den = 0;
};

ProductSystem make_product_system(const Ifs& fa, const Ifs& fb, double tau);

struct ProductState {
  double x = 0, y = 0, t = 0;
};

ProductState step_product(const ProductSystem& sys, const ProductState& s);
ProductState product_power(const ProductSystem& sys, const ProductState& s, int k);

/// Number of rotation wraps (= x refinements) over k steps from t0; equals
/// floor(t0 + k alpha) up to floating-point ties.
int product_wraps(const ProductSystem& sys, double t0, int k);

ProductState sample_product_state(const ProductSystem& sys, std::mt19937_64& rng, int depth = 40);

/// Symbolic counterpart of step_product: the y window shifts every step,
/// the x window only on wraps, t advances exactly.  See SkewOrbit.
class ProductOrbit {
 public:
  ProductOrbit(const ProductSystem& sys, std::mt19937_64& rng, int window = 40);
  ProductState state() const;
  Word x_word(int depth) const;
  Word y_word(int depth) const;
  double t() const { return t_; }
  void advance();

 private:
  const ProductSystem* sys_;
  std::vector<uint32_t> xwin_, ywin_;
  size_t xhead_ = 0, yhead_ = 0;
  double t_ = 0;
  std::mt19937_64 rng_;
};

/// V^t = span(tau a^t, -1); the perp coordinates of the returned subspace
/// span W^t = span(1, tau a^t).
Subspace direction_subspace(const ProductSystem& sys, double t);

/// Check that pulling V^{t0} back through diag(a^l, b^k) lands on V^{t_k},
/// where l counts the wraps and t_k is the stepwise rotation orbit.
struct RenormCheck {
  int l = 0;
  double t_k = 0;
  double residual = 0;  // angle between the two lines
};

RenormCheck renormalize_direction(const ProductSystem& sys, double t0, int k);

/// Occupation frequencies of product cells along orbits started from the
/// invariant measure, against the exact product weights.
struct PreservationReport {
  std::vector<double> observed, expected;
  double max_abs_gap = 0;
  int64_t samples = 0;
};

/// Cells: depth-d cylinder word x group element.  Requires a finite closure.
PreservationReport skew_preservation_check(const SkewSystem& sys, int depth, int n_orbits,
                                           int horizon, std::mt19937_64& rng);

/// Cells: depth-d y-cylinder word x t-bin.
PreservationReport product_preservation_check(const ProductSystem& sys, int depth, int t_bins,
                                              int n_orbits, int horizon, std::mt19937_64& rng);

/// Ergodic average of f along a fresh invariant-measure orbit.  The start
/// is sampled inside: a finite-precision start point pins down only a few
/// dozen symbols of its future, so long averages need the symbol stream.
double birkhoff_average(const SkewSystem& sys, const std::function<double(const SkewState&)>& f,
                        std::mt19937_64& rng, int steps);
double birkhoff_average(const ProductSystem& sys,
                        const std::function<double(const ProductState&)>& f, std::mt19937_64& rng,
                        int steps);

}  // namespace fracslice
