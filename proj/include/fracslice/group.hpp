#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fracslice/rng.hpp"

namespace fracslice {

class group_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kOrthogonalityTol = 1e-10;
inline constexpr double kDedupeTol = 1e-9;
inline constexpr double kDriftTol = 1e-12;

bool is_orthogonal(const Eigen::MatrixXd& m, double tol = kOrthogonalityTol);

/// Nearest-orthogonal repair via sign-fixed QR; used whenever accumulated
/// products drift beyond kDriftTol.
Eigen::MatrixXd reorthonormalize(const Eigen::MatrixXd& m);

/// Snaps m back to the orthogonal manifold only if it has drifted.
Eigen::MatrixXd keep_orthogonal(Eigen::MatrixXd m);

/// Haar-distributed element of O(n): QR of a standard normal matrix with the
/// R-diagonal sign correction.
Eigen::MatrixXd sample_orthogonal(int n, std::mt19937_64& rng);

/// A (n-m)-dimensional linear subspace V of R^n together with an orthonormal
/// basis of its orthogonal complement.  project_coords returns coordinates of
/// the projection onto V_perp, which is an isometry onto R^m.
struct Subspace {
  Eigen::MatrixXd basis;       // n x (n-m)
  Eigen::MatrixXd basis_perp;  // n x m

  int ambient() const { return static_cast<int>(basis.rows()); }
  int dim() const { return static_cast<int>(basis.cols()); }
  int codim() const { return static_cast<int>(basis_perp.cols()); }
};

/// V spanned by the last n-m coordinate axes; V_perp by the first m.
Subspace axis_subspace(int n, int m);

/// Builds the subspace spanned by the given (independent) columns and
/// completes the orthogonal complement.
Subspace span_subspace(const Eigen::MatrixXd& columns);

Subspace rotate_subspace(const Eigen::MatrixXd& g, const Subspace& v);

/// Uniform subspace: Haar rotation applied to the axis subspace.
Subspace sample_grassmann(int n, int m, std::mt19937_64& rng);

Eigen::VectorXd project_coords(const Subspace& v, const Eigen::VectorXd& x);

/// Operator-norm distance between the projectors onto the two subspaces.
double grassmann_metric(const Subspace& a, const Subspace& b);

/// Closed subgroup of O(n) generated by a finite set of rotations.  When the
/// closure stays below `cap` elements the full element list is stored and
/// Haar sampling is uniform; otherwise the group is flagged infinite and
/// Haar sampling falls back to generator random walks.
struct RotationGroup {
  int n = 0;
  bool finite = true;
  std::vector<Eigen::MatrixXd> generators;  // generators plus their inverses
  std::vector<Eigen::MatrixXd> elements;    // only when finite; elements[0] = I
  int walk_length = 64;
  double dedupe_tol = kDedupeTol;

  size_t order() const { return elements.size(); }
  std::optional<size_t> find(const Eigen::MatrixXd& m) const;
};

RotationGroup close_group(const std::vector<Eigen::MatrixXd>& generators,
                          double dedupe_tol = kDedupeTol, size_t cap = 100000);

Eigen::MatrixXd haar_sample(const RotationGroup& g, std::mt19937_64& rng);

/// Both sides of the averaging identity nu(E) = integral of eta(E q^{-1})
/// over the group: lhs with nu uniform, rhs averaging the eta-mass of the
/// translated sets.  Exact for any probability weights eta on a finite group.
struct ConvolutionCheck {
  double lhs = 0;
  double rhs = 0;
  double gap() const { return std::abs(lhs - rhs); }
};

ConvolutionCheck convolution_identity_check(const RotationGroup& q, const std::vector<double>& eta,
                                            const std::vector<size_t>& subset);

/// Planar rotation by angle within O(n), acting on coordinates (i, j).
Eigen::MatrixXd plane_rotation(int n, int i, int j, double angle);

}  // namespace fracslice
