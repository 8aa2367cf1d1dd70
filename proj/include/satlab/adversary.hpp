#pragma once

// Worst-case data inside the noise ball, built from band projectors of AA*:
// y_k = y - delta_k G z_k with z_k proportional to A(x_true - x_prior) and
// normalized so that ||G z_k|| = 1.

#include "satlab/forward_models.hpp"
#include "satlab/hilbert.hpp"
#include "satlab/param_choice.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace satlab {

// Below this norm G * misfit counts as zero and the fallback direction is used.
inline constexpr double kMisfitZero = 1e-13;

struct AdversarialDatum {
  std::size_t index = 0;  // position of lam_k in the eigenvalue list
  double lam_k = 0.0;
  double delta_k = 0.0;
  Element z_k;
  SpectralProjector projector;
  NoisyObservation observation;
};

/// z = misfit / ||G misfit|| when G misfit != 0, else the first left vector in
/// the band. Throws invalid_input for an empty projector.
Element adversarial_direction(const SpectralDecomposition& d, const SpectralProjector& projector,
                              const Element& misfit);

/// Datum with delta_k = lam_k. lam_k must be an eigenvalue of AA* for the
/// instance's linearization (matched to 1e-12 relative).
AdversarialDatum make_adversarial_datum(const ProblemInstance& instance, double lam_k);

/// delta^2 (lam / 2) / (alpha + 3 lam / 2)^2.
double mdps2_lower_bound(double delta_k, double lam_k, double alpha_k);

struct AdversarialCheck {
  double alpha = 0.0;
  double bias_sq = 0.0;          // ||xhat_alpha - x_true||^2, noise-free
  double perturbation_sq = 0.0;  // ||xhat_alpha^delta - xhat_alpha||^2
  double error_sq = 0.0;         // ||xhat_alpha^delta - x_true||^2
  double cross_term = 0.0;       // 2 <xhat_alpha - x_true, xhat_alpha^delta - xhat_alpha>
  // 2 alpha delta ||G A(x_true - x*)|| ||(alpha I + AA*)^{-1} G z||^2
  double spectral_cross_term = 0.0;
  double lower_bound = 0.0;
  double pythagoras_residual = 0.0;
  bool sign_ok = false;
  bool chain_ok = false;

  bool passed() const { return sign_ok && chain_ok && pythagoras_residual <= 1e-12; }
};

AdversarialCheck verify_adversarial_inequalities(const ProblemInstance& instance,
                                                 const AdversarialDatum& datum, double alpha_k);

/// Index of the eigenvalue nearest to `delta` in log distance.
std::size_t nearest_band_index(const SpectralDecomposition& d, double delta);

struct DirectionRow {
  std::size_t index = 0;
  std::string kind;  // "adversarial", "random" or "exact"
  double alpha = 0.0;
  double error = 0.0;
  double data_residual = 0.0;
  bool converged = false;
  std::string failure;
};

struct SupErrorResult {
  double worst_error = 0.0;
  std::size_t argmax = 0;  // position in rows
  Element argmax_direction;
  double worst_alpha = 0.0;
  bool worst_converged = false;
  std::vector<DirectionRow> rows;
};

/// Max of ||x_{alpha(delta, y^delta)} - x_true|| over the adversarial direction
/// for the band nearest delta (when requested) and n_random seeded unit
/// directions: a lower bound on the worst-case error.
SupErrorResult sup_error(const ProblemInstance& instance, const Selector& selector, double delta,
                         int n_random, std::uint64_t seed, bool include_adversarial,
                         int jobs = 1);

}  // namespace satlab
