#pragma once

#include "satlab/adversary.hpp"
#include "satlab/forward_models.hpp"
#include "satlab/param_choice.hpp"
#include "satlab/tikhonov.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace satlab {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of log(y) on log(x). Needs two distinct positive x.
SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points);

struct RateSample {
  double delta = 0.0;
  double worst_error = 0.0;
  double alpha = 0.0;
  std::string rule;
  bool converged = false;
};

struct RateReport {
  std::vector<RateSample> samples;  // decreasing delta
  SlopeFit fit;
  std::vector<std::pair<double, std::string>> failures;
  // Full per-direction tables, aligned with samples.
  std::vector<SupErrorResult> details;
};

struct RateOptions {
  int n_random = 8;
  std::uint64_t seed = 0;
  bool include_adversarial = true;
  int jobs = 1;
};

/// Worst-case error over the delta grid (strictly decreasing, >= 4 points) and
/// its log-log slope over converged samples.
RateReport rate_experiment(const ProblemInstance& instance, const Selector& selector,
                           const std::vector<double>& delta_grid, const RateOptions& opts = {});

/// Geometric grid from hi down to lo with `count` points.
std::vector<double> geometric_grid(double hi, double lo, int count);

struct SaturationRow {
  std::size_t k = 0;  // 1-based eigenvalue index
  double lam_k = 0.0;
  double delta_k = 0.0;
  double alpha_k = 0.0;
  double error_k = 0.0;
  double ratio_k = 0.0;           // error_k / sqrt(delta_k)
  double delta_over_alpha = 0.0;  // delta_k / alpha_k
  bool isolated = false;          // band holds lam_k alone
  bool checks_passed = false;
  bool flagged = false;
  std::string note;
  AdversarialCheck check;
};

struct SaturationReport {
  std::vector<SaturationRow> rows;
  double first_ratio = 0.0;
  double ratio_floor = 0.0;  // min ratio over the last half of rows
  double first_delta_over_alpha = 0.0;
  double tail_delta_over_alpha = 0.0;  // min delta/alpha over the last half

  // Errors do not decay faster than sqrt(delta) along the sequence.
  bool ratio_bounded_below(double fraction = 0.1) const {
    return ratio_floor >= fraction * first_ratio;
  }
  // delta_k / alpha_k stays away from zero.
  bool delta_over_alpha_bounded_below(double fraction = 0.5) const {
    return tail_delta_over_alpha >= fraction * first_delta_over_alpha;
  }
};

/// Runs the selector on the adversarial data y - lam_k G z_k for every k in
/// [k_first, k_last] (1-based). Bands holding more than one eigenvalue are
/// allowed and reported through SaturationRow::isolated. Refuses instances
/// with x* = x_true, for which the probe is vacuous.
SaturationReport saturation_probe(const ProblemInstance& instance, const Selector& selector,
                                  std::size_t k_first, std::size_t k_last, int jobs = 1);

struct LemmaRow {
  double alpha = 0.0;
  double error = 0.0;
  double error_bound = 0.0;  // (delta + alpha ||u||) / sqrt(alpha (1 - L ||u||))
  double residual = 0.0;
  double residual_bound = 0.0;  // delta + 2 alpha ||u||
  bool converged = false;
  bool error_ok = false;
  bool residual_ok = false;
  Element x;
};

struct LemmaReport {
  double delta = 0.0;
  double norm_u = 0.0;
  double lipschitz = 0.0;
  std::vector<LemmaRow> rows;

  int violations() const;
  int converged_count() const;
};

/// Checks both Lipschitz-case error and residual bounds at each alpha, with no
/// slack. Needs a nu = 1/2 source and L ||u|| < 1 (analytic L).
LemmaReport lemma_f22_check(const ProblemInstance& instance, const std::vector<double>& alpha_grid,
                            const NoisyObservation& obs, const SolverOptions& opts = {});

struct ComparisonRow {
  double alpha = 0.0;
  double nonlinear_error = 0.0;
  double linearized_error = 0.0;
  double factor = 0.0;
  bool passed = false;
};

// Relative slack for the comparison: x_alpha is a minimizer only to the
// Euler tolerance, and on linear models (factor 1) both sides coincide.
inline constexpr double kComparisonSlack = 1e-9;

/// ||xhat_alpha - x_true|| <= factor * ||x_alpha - x_true|| (1 + slack) on
/// converged rows.
std::vector<ComparisonRow> compare_with_linearization(const ProblemInstance& instance,
                                                      const NoisyObservation& obs,
                                                      const LemmaReport& lemma, double factor);

/// Relative gap in the exact decomposition of x_alpha - xhat_alpha into the
/// linearization-error and derivative-mismatch terms (both through the
/// resolvent of A*A, A = F'(x_true)). Zero at exact stationary points.
double linearization_identity_gap(const ProblemInstance& instance, const NoisyObservation& obs,
                                  const TikhonovResult& solution);

struct ConstantReport {
  double rho = 0.0;
  double kappa0 = 0.0;
  double lipschitz = 0.0;
  double lipschitz_sampled = 0.0;
  std::optional<double> norm_u;
  double lipschitz_times_norm_u = 0.0;  // NaN without a nu = 1/2 source
  double prior_distance = 0.0;          // ||x* - x_true||
  double c0_range_invariance = 0.0;     // (3 rho / 2 + ||x* - x_true||) kappa0
  double c1 = 0.0;                      // sup ||F'(x)|| over the ball
  double c0_lipschitz = 0.0;            // tau/gamma/L||u|| constant
  double comparison_factor = 1.0;       // 1 + c0_lipschitz * L ||u||
};

ConstantReport constant_report(const ProblemInstance& instance, const SelectorConfig& cfg,
                               int lipschitz_samples = 100, std::uint64_t seed = 0);

}  // namespace satlab
