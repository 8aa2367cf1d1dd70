#include "satlab/hilbert.hpp"

#include "satlab/error.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace satlab {

namespace {

void require_same_size(const Element& a, const Element& b, const char* what) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::invalid_input, std::string(what) + ": dimension mismatch (" +
                                              std::to_string(a.size()) + " vs " +
                                              std::to_string(b.size()) + ")");
  }
}

void require_positive_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::invalid_parameter,
                "regularization parameter must be positive, got " + std::to_string(alpha));
  }
}

}  // namespace

double inner(const Element& a, const Element& b) {
  require_same_size(a, b, "inner");
  return a.dot(b);
}

double norm(const Element& v) { return v.norm(); }

Element adjoint_apply(const DenseOperator& a, const Element& w) {
  if (a.rows() != w.size()) {
    throw Error(ErrorKind::invalid_input, "adjoint_apply: dimension mismatch");
  }
  return a.transpose() * w;
}

double operator_norm(const DenseOperator& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues()(0);
}

SpectralDecomposition::SpectralDecomposition(Eigen::VectorXd singular_values,
                                             Eigen::MatrixXd left_vectors,
                                             Eigen::MatrixXd right_vectors)
    : singular_values_(std::move(singular_values)),
      eigenvalues_(singular_values_.array().square().matrix()),
      left_vectors_(std::move(left_vectors)),
      right_vectors_(std::move(right_vectors)) {
  if (left_vectors_.cols() != singular_values_.size() ||
      right_vectors_.cols() != singular_values_.size()) {
    throw Error(ErrorKind::invalid_input, "spectral decomposition: inconsistent rank");
  }
}

DenseOperator SpectralDecomposition::reconstruct() const {
  return left_vectors_ * singular_values_.asDiagonal() * right_vectors_.transpose();
}

Element SpectralDecomposition::apply(const Element& x) const {
  if (x.size() != dim_x()) throw Error(ErrorKind::invalid_input, "apply: dimension mismatch");
  return left_vectors_ * (singular_values_.cwiseProduct(right_vectors_.transpose() * x));
}

Element SpectralDecomposition::adjoint_apply(const Element& y) const {
  if (y.size() != dim_y()) {
    throw Error(ErrorKind::invalid_input, "adjoint_apply: dimension mismatch");
  }
  return right_vectors_ * (singular_values_.cwiseProduct(left_vectors_.transpose() * y));
}

SpectralProjector::SpectralProjector(std::vector<std::size_t> selected, Eigen::MatrixXd basis)
    : selected_(std::move(selected)), basis_(std::move(basis)) {
  if (static_cast<Eigen::Index>(selected_.size()) != basis_.cols()) {
    throw Error(ErrorKind::invalid_input, "projector: basis does not match selection");
  }
}

Element SpectralProjector::apply(const Element& v) const {
  if (v.size() != basis_.rows()) {
    throw Error(ErrorKind::invalid_input, "projector: dimension mismatch");
  }
  if (selected_.empty()) return Element::Zero(v.size());
  return basis_ * (basis_.transpose() * v);
}

SpectralDecomposition decompose(const DenseOperator& a) {
  if (a.rows() == 0 || a.cols() == 0) {
    throw Error(ErrorKind::invalid_input, "decompose: operator has zero dimension");
  }
  if (a.cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorKind::invalid_input, "decompose: operator is identically zero");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = kRankCutoff * s(0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  return SpectralDecomposition(s.head(rank), svd.matrixU().leftCols(rank),
                               svd.matrixV().leftCols(rank));
}

SpectralProjector spectral_window(const SpectralDecomposition& d, double lower, double upper) {
  std::vector<std::size_t> selected;
  const Eigen::VectorXd& lam = d.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > lower && lam(i) <= upper) selected.push_back(static_cast<std::size_t>(i));
  }
  Eigen::MatrixXd basis(d.dim_y(), static_cast<Eigen::Index>(selected.size()));
  for (std::size_t j = 0; j < selected.size(); ++j) {
    basis.col(static_cast<Eigen::Index>(j)) =
        d.left_vectors().col(static_cast<Eigen::Index>(selected[j]));
  }
  return SpectralProjector(std::move(selected), std::move(basis));
}

SpectralProjector band_projector(const SpectralDecomposition& d, double lam_k) {
  if (!(lam_k > 0.0)) {
    throw Error(ErrorKind::invalid_parameter, "band_projector: lam_k must be positive");
  }
  return spectral_window(d, 0.5 * lam_k, 1.5 * lam_k);
}

Element resolvent_apply(const SpectralDecomposition& d, double alpha, const Element& v) {
  require_positive_alpha(alpha);
  if (v.size() != d.dim_x()) {
    throw Error(ErrorKind::invalid_input, "resolvent_apply: dimension mismatch");
  }
  const Eigen::MatrixXd& vr = d.right_vectors();
  const Eigen::VectorXd coeff = vr.transpose() * v;
  const Element perp = v - vr * coeff;
  const Eigen::VectorXd scaled =
      coeff.array() / (alpha + d.eigenvalues().array());
  return vr * scaled + perp / alpha;
}

Element resolvent_apply_y(const SpectralDecomposition& d, double alpha, const Element& v) {
  require_positive_alpha(alpha);
  if (v.size() != d.dim_y()) {
    throw Error(ErrorKind::invalid_input, "resolvent_apply_y: dimension mismatch");
  }
  const Eigen::MatrixXd& ul = d.left_vectors();
  const Eigen::VectorXd coeff = ul.transpose() * v;
  const Element perp = v - ul * coeff;
  const Eigen::VectorXd scaled =
      coeff.array() / (alpha + d.eigenvalues().array());
  return ul * scaled + perp / alpha;
}

Element normal_power_apply(const SpectralDecomposition& d, double nu, const Element& v) {
  if (!(nu > 0.0)) throw Error(ErrorKind::invalid_parameter, "normal_power_apply: nu must be > 0");
  if (v.size() != d.dim_x()) {
    throw Error(ErrorKind::invalid_input, "normal_power_apply: dimension mismatch");
  }
  const Eigen::MatrixXd& vr = d.right_vectors();
  const Eigen::VectorXd coeff = vr.transpose() * v;
  return vr * (d.eigenvalues().array().pow(nu) * coeff.array()).matrix();
}

Element project_onto_range(const SpectralDecomposition& d, const Element& v) {
  if (v.size() != d.dim_y()) {
    throw Error(ErrorKind::invalid_input, "project_onto_range: dimension mismatch");
  }
  return d.left_vectors() * (d.left_vectors().transpose() * v);
}

}  // namespace satlab
