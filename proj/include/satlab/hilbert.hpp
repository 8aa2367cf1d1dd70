#pragma once

// Finite-dimensional Hilbert-space primitives: singular system of a dense
// operator, spectral-family band projectors of AA*, and resolvent solves.
// Everything spectral is done in the singular basis, so projectors and
// resolvents share eigenvectors and commute exactly.

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace satlab {

using Element = Eigen::VectorXd;
using DenseOperator = Eigen::MatrixXd;

double inner(const Element& a, const Element& b);
double norm(const Element& v);

/// Applies A* (the transpose) to an element of Y.
Element adjoint_apply(const DenseOperator& a, const Element& w);

/// Spectral operator norm (largest singular value).
double operator_norm(const DenseOperator& a);

// Singular values below this fraction of sigma_1 are treated as zero.
inline constexpr double kRankCutoff = 1e-12;

class SpectralDecomposition {
 public:
  SpectralDecomposition(Eigen::VectorXd singular_values, Eigen::MatrixXd left_vectors,
                        Eigen::MatrixXd right_vectors);

  std::size_t rank() const { return static_cast<std::size_t>(singular_values_.size()); }
  Eigen::Index dim_x() const { return right_vectors_.rows(); }
  Eigen::Index dim_y() const { return left_vectors_.rows(); }

  const Eigen::VectorXd& singular_values() const { return singular_values_; }
  // lambda_i = sigma_i^2, the nonzero eigenvalues of AA* (nonincreasing).
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& left_vectors() const { return left_vectors_; }
  const Eigen::MatrixXd& right_vectors() const { return right_vectors_; }

  /// U diag(sigma) V*.
  DenseOperator reconstruct() const;

  Element apply(const Element& x) const;
  Element adjoint_apply(const Element& y) const;

 private:
  Eigen::VectorXd singular_values_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd left_vectors_;
  Eigen::MatrixXd right_vectors_;
};

/// Orthogonal projector onto the span of a subset of left singular vectors.
class SpectralProjector {
 public:
  SpectralProjector() = default;
  SpectralProjector(std::vector<std::size_t> selected, Eigen::MatrixXd basis);

  const std::vector<std::size_t>& selected_indices() const { return selected_; }
  Eigen::Index dim_y() const { return basis_.rows(); }
  bool empty() const { return selected_.empty(); }
  // Columns are the selected left singular vectors, in index order.
  const Eigen::MatrixXd& basis() const { return basis_; }

  Element apply(const Element& v) const;

 private:
  std::vector<std::size_t> selected_;
  Eigen::MatrixXd basis_;
};

/// Thin SVD with rank-revealing cutoff. Throws invalid_input on an empty
/// operator or one with no nonzero entries.
SpectralDecomposition decompose(const DenseOperator& a);

/// G = F_{upper} - F_{lower}: eigenvectors of AA* with lambda in (lower, upper].
SpectralProjector spectral_window(const SpectralDecomposition& d, double lower, double upper);

/// G_{lam} := F_{3 lam/2} - F_{lam/2}.
SpectralProjector band_projector(const SpectralDecomposition& d, double lam_k);

/// Solves (alpha I + A*A) w = v on X.
Element resolvent_apply(const SpectralDecomposition& d, double alpha, const Element& v);

/// Solves (alpha I + AA*) w = v on Y.
Element resolvent_apply_y(const SpectralDecomposition& d, double alpha, const Element& v);

/// (A*A)^nu v for nu > 0.
Element normal_power_apply(const SpectralDecomposition& d, double nu, const Element& v);

/// Orthogonal projection onto N(A*)^perp, the span of the left vectors.
Element project_onto_range(const SpectralDecomposition& d, const Element& v);

}  // namespace satlab
