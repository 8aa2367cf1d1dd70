#pragma once

#include "satlab/forward_models.hpp"
#include "satlab/hilbert.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace satlab {

struct Ball {
  Element center;
  double radius = 1.0;

  bool contains(const Element& x) const { return (x - center).norm() < radius; }
};

struct SolverOptions {
  int max_iterations = 200;
  int max_halvings = 30;
  double euler_rel_tol = 1e-10;
  double euler_floor = 1e-14;
  // When set, x_init must lie inside and results leaving it are flagged.
  std::optional<Ball> domain;
  // Extra random starts around the prior; the lowest functional value wins.
  int multistart = 0;
  std::uint64_t seed = 0;
};

struct TikhonovResult {
  double alpha = 0.0;
  Element x;
  double data_residual = 0.0;
  double euler_residual = 0.0;
  double euler_tolerance = 0.0;
  double functional_value = 0.0;
  int iterations = 0;
  bool converged = false;
  // Empty unless the solve failed outright (e.g. inside a continuation path).
  std::string failure;

  bool ok() const { return failure.empty(); }
};

/// ||F(x) - y||^2 + alpha ||x - x_prior||^2.
double tikhonov_functional(const ForwardModel& model, const Element& x, double alpha,
                           const Element& y_noisy, const Element& x_prior);

/// || F'(x)*(F(x) - y) + alpha (x - x_prior) ||.
double euler_residual(const ForwardModel& model, const Element& x, double alpha,
                      const Element& y_noisy, const Element& x_prior);

/// Scale-invariant stopping threshold
/// rel_tol * (||F'(x)|| ||F(x) - y|| + alpha ||x - x_prior|| + floor), plus
/// 8 eps (alpha (||x|| + ||x_prior||) + ||F'(x)|| (2 ||y|| + ||F(x) - y||)) for
/// the rounding error of the gradient evaluation.
double euler_tolerance(const ForwardModel& model, const Element& x, double alpha,
                       const Element& y_noisy, const Element& x_prior,
                       const SolverOptions& opts = {});

/// Closed-form minimizer of the linearized functional:
/// x_true + (alpha I + A*A)^{-1} (alpha (x_prior - x_true) + A* noise).
Element solve_linearized(const SpectralDecomposition& d, double alpha, const Element& x_true,
                         const Element& x_prior, const Element& noise_vec);

/// Damped Gauss-Newton on the stacked residual [F(x) - y; sqrt(alpha)(x - x_prior)].
/// Hitting the iteration cap returns converged = false rather than throwing.
TikhonovResult solve_nonlinear(const ForwardModel& model, double alpha, const Element& y_noisy,
                               const Element& x_prior, const Element& x_init,
                               const SolverOptions& opts = {});

/// Warm-started solves along a strictly decreasing alpha grid, the first from
/// x_prior. Failures are recorded per point without aborting the path.
std::vector<TikhonovResult> continuation_solve(const ForwardModel& model,
                                               const std::vector<double>& alpha_grid,
                                               const Element& y_noisy, const Element& x_prior,
                                               const SolverOptions& opts = {});

}  // namespace satlab
