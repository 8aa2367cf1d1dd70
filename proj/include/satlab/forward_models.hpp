#pragma once

// Forward operators with known ground truth and closed-form constants for the
// Lipschitz and range-invariance structure of their derivatives.

#include "satlab/hilbert.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>

namespace satlab {

enum class ModelKind { linear, composition };

const char* to_string(ModelKind kind);

struct AnalyticConstants {
  double lipschitz = 0.0;         // L: ||F'(x) - F'(z)|| <= L ||x - z||
  double kappa0 = 0.0;            // ||I - R(x, z)|| <= kappa0 ||x - z||
  double derivative_bound = 0.0;  // C1 >= sup ||F'(x)||
  double operator_norm = 0.0;     // ||A|| of the underlying matrix
};

class ForwardModel {
 public:
  explicit ForwardModel(double domain_radius);
  virtual ~ForwardModel() = default;

  virtual ModelKind kind() const = 0;
  virtual Eigen::Index dim_x() const = 0;
  virtual Eigen::Index dim_y() const = 0;

  virtual Element apply(const Element& x) const = 0;
  virtual Element derivative_apply(const Element& x, const Element& h) const = 0;
  virtual Element derivative_adjoint_apply(const Element& x, const Element& g) const = 0;
  virtual DenseOperator jacobian(const Element& x) const = 0;

  // F'(x)* F'(x); models with structure override this.
  virtual Eigen::MatrixXd normal_matrix(const Element& x) const;

  virtual AnalyticConstants analytic_constants() const = 0;

  // The matrix A: F(x) = A x for linear models, F = A o g for compositions.
  virtual const DenseOperator& base_operator() const = 0;

  double domain_radius() const { return domain_radius_; }

 protected:
  void check_x(const Element& x) const;
  void check_y(const Element& y) const;

 private:
  double domain_radius_;
};

class LinearModel final : public ForwardModel {
 public:
  LinearModel(DenseOperator a, double domain_radius = 1.0);

  ModelKind kind() const override { return ModelKind::linear; }
  Eigen::Index dim_x() const override { return a_.cols(); }
  Eigen::Index dim_y() const override { return a_.rows(); }

  Element apply(const Element& x) const override;
  Element derivative_apply(const Element& x, const Element& h) const override;
  Element derivative_adjoint_apply(const Element& x, const Element& g) const override;
  DenseOperator jacobian(const Element& x) const override;
  Eigen::MatrixXd normal_matrix(const Element& x) const override;
  AnalyticConstants analytic_constants() const override;
  const DenseOperator& base_operator() const override { return a_; }

 private:
  DenseOperator a_;
  Eigen::MatrixXd gram_;
  double norm_;
};

/// F(x) = A g(x), g(x) = x + beta sin(x) componentwise, 0 <= beta < 1.
/// F'(x) = A g'(x) and R(x, z) = g'(z)^{-1} g'(x) gives F'(x) = F'(z) R(x, z).
class CompositionModel final : public ForwardModel {
 public:
  CompositionModel(DenseOperator a, double beta, double domain_radius = 1.0);

  ModelKind kind() const override { return ModelKind::composition; }
  Eigen::Index dim_x() const override { return a_.cols(); }
  Eigen::Index dim_y() const override { return a_.rows(); }

  Element apply(const Element& x) const override;
  Element derivative_apply(const Element& x, const Element& h) const override;
  Element derivative_adjoint_apply(const Element& x, const Element& g) const override;
  DenseOperator jacobian(const Element& x) const override;
  Eigen::MatrixXd normal_matrix(const Element& x) const override;
  AnalyticConstants analytic_constants() const override;
  const DenseOperator& base_operator() const override { return a_; }

  double beta() const { return beta_; }

  Element inner_map(const Element& x) const;
  // Diagonal of g'(x).
  Element inner_derivative(const Element& x) const;
  // Diagonal of R(x, z) = g'(z)^{-1} g'(x).
  Element range_invariance_factor(const Element& x, const Element& z) const;

 private:
  DenseOperator a_;
  Eigen::MatrixXd gram_;
  double beta_;
  double norm_;
};

/// A = diag(scale * i^{-s}), i = 1..n.
std::shared_ptr<const LinearModel> make_diagonal_linear(int n, double s, double scale = 1.0,
                                                        double domain_radius = 1.0);

DenseOperator diagonal_operator(int n, double s, double scale = 1.0);

std::shared_ptr<const CompositionModel> make_composition_model(const DenseOperator& a,
                                                               double beta,
                                                               double domain_radius = 1.0);

/// Coordinates 1/i scaled to unit norm.
Element harmonic_element(Eigen::Index n);

/// Uniformly distributed unit vector.
Element random_unit(Eigen::Index n, std::mt19937_64& rng);

/// RNG seeded from (seed, stream) so parallel workers draw reproducibly.
std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream);

struct SourcePrior {
  double nu = 0.5;
  Element element;  // u in Y for nu = 1/2, w in X for nu >= 1
  double element_norm = 0.0;

  bool is_half() const { return nu == 0.5; }
};

struct ProblemInstance {
  std::shared_ptr<const ForwardModel> model;
  Element x_true;
  Element x_prior;
  Element y_exact;
  std::optional<SourcePrior> source;
  // Singular system of F'(x_true).
  std::shared_ptr<const SpectralDecomposition> linearization;

  double rho() const { return model->domain_radius(); }
  bool in_domain(const Element& x) const;
};

/// Builds x* = x_true - A*u (nu = 1/2, u projected onto N(A*)^perp) or
/// x* = x_true - (A*A)^nu w (nu >= 1), A = F'(x_true).
ProblemInstance synthesize_instance(std::shared_ptr<const ForwardModel> model,
                                    const Element& x_true, const SourcePrior& source,
                                    bool enforce_lipschitz_bound = false);

/// Instance with an explicit prior and no source element.
ProblemInstance make_instance(std::shared_ptr<const ForwardModel> model, const Element& x_true,
                              const Element& x_prior);

/// Lower bound on L from sampled pairs inside B_rho(center).
double estimate_lipschitz(const ForwardModel& model, const Element& center, int n_samples,
                          std::uint64_t seed);

struct NoisyObservation {
  Element y_noisy;
  double delta = 0.0;
};

NoisyObservation add_noise(const ProblemInstance& instance, double delta,
                           const Element& direction);

}  // namespace satlab
