#pragma once

// Regularization parameter choice: the discrepancy principle (root of
// ||F(x_alpha) - y|| = tau*delta), its sequential variant on the grid
// alpha0 * gamma^j, and a priori alpha = c * delta^p.

#include "satlab/forward_models.hpp"
#include "satlab/tikhonov.hpp"

#include <optional>
#include <string>

namespace satlab {

enum class Rule { discrepancy, sequential, apriori };

// The fallback tag marks a discrepancy selection that had to use a grid scan.
enum class RuleTag { discrepancy, discrepancy_fallback, sequential, apriori };

const char* to_string(Rule rule);
const char* to_string(RuleTag tag);
Rule parse_rule(const std::string& name);

struct SelectorConfig {
  double tau = 1.5;
  double gamma = 0.5;
  double alpha0 = 1.0;
  double alpha_min = 1e-14;
  double alpha_max = 1e6;
  double root_tolerance = 1e-6;
  int max_bisections = 200;
  int max_expansions = 4;     // bracket widening by factors of 10, per side
  int max_grid_steps = 200;   // cap on j for the sequential rule
  double scan_ratio = 0.8;    // fallback scan for nonlinear bracketing failures
  // Runs tied to the Lipschitz-derivative saturation result need tau > 1.
  bool require_tau_above_one = false;
  SolverOptions solver;
};

/// Throws hypothesis_violation when tau, gamma or alpha0 break the rule's
/// admissibility conditions, invalid_parameter for a malformed bracket.
void validate(const SelectorConfig& cfg, Rule rule);

struct SelectionResult {
  double alpha = 0.0;
  TikhonovResult solution;
  RuleTag rule = RuleTag::discrepancy;
  int evaluations = 0;
  // Sequential rule only: residual at alpha / gamma, the rejected predecessor.
  std::optional<double> previous_residual;
};

SelectionResult discrepancy_select(const ForwardModel& model, const NoisyObservation& obs,
                                   const Element& x_prior, const SelectorConfig& cfg);

SelectionResult sequential_select(const ForwardModel& model, const NoisyObservation& obs,
                                  const Element& x_prior, const SelectorConfig& cfg);

/// alpha = c * delta^p with p in (0, 2].
double apriori_select(double delta, double p, double c);

struct Selector {
  Rule rule = Rule::discrepancy;
  SelectorConfig cfg;
  double apriori_exponent = 2.0 / 3.0;
  double apriori_constant = 1.0;

  SelectionResult select(const ForwardModel& model, const NoisyObservation& obs,
                         const Element& x_prior) const;
};

struct AlphaFloorCheck {
  bool passed = false;
  double bound = 0.0;
  double ratio = 0.0;  // alpha / bound (infinite when the bound is 0)
};

/// alpha >= (tau - 1) gamma delta / (2 ||u||). A missing ||u|| means the
/// source hypothesis is absent.
AlphaFloorCheck alpha_lower_bound_check(const SelectionResult& selection,
                                        const SelectorConfig& cfg,
                                        std::optional<double> norm_u, double delta);

}  // namespace satlab
