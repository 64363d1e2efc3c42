// Between-pattern distance machinery: PCA subspace extraction, the
// canonical-correlations (mutual subspace) distance between feature-vector
// sets, and the transform mapping bounded distances onto [0, inf).

#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace calib {

// A set of feature vectors of common dimension, stored column-wise.
struct PatternSet {
  Eigen::MatrixXd vectors;  // D x n, one column per feature vector
  std::string class_label;

  int dim() const { return static_cast<int>(vectors.rows()); }
  int size() const { return static_cast<int>(vectors.cols()); }
};

// A d_p-dimensional principal subspace: D x d_p matrix with orthonormal
// columns.
struct SubspaceBasis {
  Eigen::MatrixXd basis;
  int dp = 0;
};

// Top-d_p principal directions of the mean-centered set, ordered by
// decreasing explained variance. Throws if the centered data has fewer than
// d_p singular values above 1e-10 relative to the largest.
inline SubspaceBasis pca_basis(const PatternSet& set, int dp) {
  if (dp < 1) throw std::invalid_argument("pca_basis: d_p must be >= 1");
  const int n = set.size();
  const int d = set.dim();
  if (n < dp)
    throw std::invalid_argument("pca_basis: need at least d_p vectors, have " +
                                std::to_string(n));
  Eigen::MatrixXd centered = set.vectors.colwise() - set.vectors.rowwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (dp > sv.size())
    throw std::runtime_error("pca_basis: rank-deficient set, requested d_p=" +
                             std::to_string(dp));
  int rank = 0;
  const double tol = 1e-10 * sv(0);
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  if (rank < dp)
    throw std::runtime_error("pca_basis: rank-deficient set (rank " +
                             std::to_string(rank) + ", requested d_p=" +
                             std::to_string(dp) + ")");
  (void)d;
  return SubspaceBasis{svd.matrixU().leftCols(dp), dp};
}

// Mutual-subspace distance 1 - sigma_max(A^T B), the largest canonical
// correlation between the two subspaces. Singular values are clamped to
// [0, 1]: cosines of principal angles cannot exceed 1.
inline double subspace_distance(const SubspaceBasis& a, const SubspaceBasis& b) {
  if (a.basis.rows() != b.basis.rows())
    throw std::invalid_argument(
        "subspace_distance: ambient dimensions differ (" +
        std::to_string(a.basis.rows()) + " vs " +
        std::to_string(b.basis.rows()) + ")");
  Eigen::MatrixXd m = a.basis.transpose() * b.basis;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  double smax = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  smax = std::clamp(smax, 0.0, 1.0);
  return 1.0 - smax;
}

// Strictly increasing bijection [0, 1) -> [0, inf): delta |-> -ln(1 - delta).
inline double unbound_transform(double delta) {
  if (!(delta >= 0.0 && delta < 1.0))
    throw std::domain_error("unbound_transform: delta must be in [0, 1)");
  return -std::log1p(-delta);
}

}  // namespace calib
