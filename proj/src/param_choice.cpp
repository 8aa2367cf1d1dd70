#include "satlab/param_choice.hpp"

#include "satlab/error.hpp"

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace satlab {

const char* to_string(Rule rule) {
  switch (rule) {
    case Rule::discrepancy: return "discrepancy";
    case Rule::sequential: return "sequential";
    case Rule::apriori: return "apriori";
  }
  return "unknown";
}

const char* to_string(RuleTag tag) {
  switch (tag) {
    case RuleTag::discrepancy: return "discrepancy";
    case RuleTag::discrepancy_fallback: return "discrepancy-fallback";
    case RuleTag::sequential: return "sequential";
    case RuleTag::apriori: return "apriori";
  }
  return "unknown";
}

Rule parse_rule(const std::string& name) {
  if (name == "discrepancy") return Rule::discrepancy;
  if (name == "sequential") return Rule::sequential;
  if (name == "apriori") return Rule::apriori;
  throw Error(ErrorKind::invalid_input, "unknown parameter choice rule '" + name + "'");
}

void validate(const SelectorConfig& cfg, Rule rule) {
  switch (rule) {
    case Rule::discrepancy:
      if (!(cfg.tau >= 1.0)) {
        throw Error(ErrorKind::hypothesis_violation,
                    "discrepancy principle requires tau >= 1, got " + std::to_string(cfg.tau));
      }
      if (cfg.require_tau_above_one && !(cfg.tau > 1.0)) {
        throw Error(ErrorKind::hypothesis_violation,
                    "this experiment requires tau > 1, got " + std::to_string(cfg.tau));
      }
      if (!(cfg.alpha_min > 0.0) || !(cfg.alpha_max > cfg.alpha_min)) {
        throw Error(ErrorKind::invalid_parameter, "alpha bracket must satisfy 0 < min < max");
      }
      if (!(cfg.root_tolerance > 0.0)) {
        throw Error(ErrorKind::invalid_parameter, "root tolerance must be positive");
      }
      break;
    case Rule::sequential:
      if (!(cfg.tau > 1.0)) {
        throw Error(ErrorKind::hypothesis_violation,
                    "sequential discrepancy principle requires tau > 1, got " +
                        std::to_string(cfg.tau));
      }
      if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) {
        throw Error(ErrorKind::hypothesis_violation,
                    "sequential discrepancy principle requires 0 < gamma < 1, got " +
                        std::to_string(cfg.gamma));
      }
      if (!(cfg.alpha0 > 0.0)) {
        throw Error(ErrorKind::hypothesis_violation,
                    "sequential discrepancy principle requires alpha0 > 0");
      }
      break;
    case Rule::apriori:
      break;
  }
}

namespace {

// Tikhonov solves keyed by alpha; each new solve starts from the stored
// solution nearest in log(alpha).
class WarmStartedSolver {
 public:
  WarmStartedSolver(const ForwardModel& model, const NoisyObservation& obs,
                    const Element& x_prior, const SolverOptions& opts)
      : model_(model), obs_(obs), x_prior_(x_prior), opts_(opts) {}

  const TikhonovResult& solve(double alpha) {
    const Element& start = nearest_start(alpha);
    TikhonovResult r = solve_nonlinear(model_, alpha, obs_.y_noisy, x_prior_, start, opts_);
    ++evaluations_;
    history_.push_back(std::move(r));
    return history_.back();
  }

  int evaluations() const { return evaluations_; }

 private:
  const Element& nearest_start(double alpha) const {
    const Element* best = &x_prior_;
    double best_gap = std::numeric_limits<double>::infinity();
    for (const auto& r : history_) {
      if (opts_.domain && !opts_.domain->contains(r.x)) continue;
      const double gap = std::abs(std::log(r.alpha) - std::log(alpha));
      if (gap < best_gap) {
        best_gap = gap;
        best = &r.x;
      }
    }
    return *best;
  }

  const ForwardModel& model_;
  const NoisyObservation& obs_;
  const Element& x_prior_;
  const SolverOptions& opts_;
  std::vector<TikhonovResult> history_;
  int evaluations_ = 0;
};

void require_noise(const NoisyObservation& obs) {
  if (!(obs.delta > 0.0)) {
    throw Error(ErrorKind::invalid_parameter, "parameter choice needs a positive noise level");
  }
}

SelectionResult grid_scan_fallback(WarmStartedSolver& solver, double alpha_hi, double alpha_lo,
                                   double target, const SelectorConfig& cfg) {
  for (double alpha = alpha_hi; alpha >= alpha_lo; alpha *= cfg.scan_ratio) {
    const TikhonovResult& r = solver.solve(alpha);
    if (r.data_residual <= target) {
      return SelectionResult{alpha, r, RuleTag::discrepancy_fallback, solver.evaluations(), {}};
    }
  }
  throw Error(ErrorKind::no_solution,
              "discrepancy principle: no alpha on the fallback scan reaches tau*delta");
}

}  // namespace

SelectionResult discrepancy_select(const ForwardModel& model, const NoisyObservation& obs,
                                   const Element& x_prior, const SelectorConfig& cfg) {
  validate(cfg, Rule::discrepancy);
  require_noise(obs);
  const double target = cfg.tau * obs.delta;
  WarmStartedSolver solver(model, obs, x_prior, cfg.solver);

  double alpha_hi = cfg.alpha_max;
  double res_hi = solver.solve(alpha_hi).data_residual;
  for (int e = 0; res_hi < target && e < cfg.max_expansions; ++e) {
    alpha_hi *= 10.0;
    res_hi = solver.solve(alpha_hi).data_residual;
  }
  if (res_hi < target) {
    throw Error(ErrorKind::no_solution,
                "discrepancy principle has no solution: residual ceiling " +
                    std::to_string(res_hi) + " < tau*delta = " + std::to_string(target));
  }

  double alpha_lo = cfg.alpha_min;
  double res_lo = solver.solve(alpha_lo).data_residual;
  for (int e = 0; res_lo > target && e < cfg.max_expansions; ++e) {
    alpha_lo /= 10.0;
    res_lo = solver.solve(alpha_lo).data_residual;
  }
  if (res_lo > target) {
    if (model.kind() != ModelKind::linear) {
      return grid_scan_fallback(solver, alpha_hi, alpha_lo, target, cfg);
    }
    throw Error(ErrorKind::no_solution,
                "discrepancy principle has no solution: residual floor " +
                    std::to_string(res_lo) + " > tau*delta = " + std::to_string(target));
  }

  double log_lo = std::log10(alpha_lo);
  double log_hi = std::log10(alpha_hi);
  for (int it = 0; it < cfg.max_bisections; ++it) {
    const double log_mid = 0.5 * (log_lo + log_hi);
    const double alpha = std::pow(10.0, log_mid);
    const TikhonovResult& r = solver.solve(alpha);
    if (std::abs(r.data_residual - target) <= cfg.root_tolerance * target) {
      return SelectionResult{alpha, r, RuleTag::discrepancy, solver.evaluations(), {}};
    }
    if (r.data_residual > target) {
      log_hi = log_mid;
    } else {
      log_lo = log_mid;
    }
    if (log_hi - log_lo < 1e-15 * std::max(1.0, std::abs(log_mid))) break;
  }
  throw Error(ErrorKind::nonconvergence,
              "discrepancy principle: bisection did not reach the root tolerance");
}

SelectionResult sequential_select(const ForwardModel& model, const NoisyObservation& obs,
                                  const Element& x_prior, const SelectorConfig& cfg) {
  validate(cfg, Rule::sequential);
  require_noise(obs);
  const double target = cfg.tau * obs.delta;
  WarmStartedSolver solver(model, obs, x_prior, cfg.solver);

  std::optional<double> previous;
  double alpha = cfg.alpha0;
  for (int j = 0; j <= cfg.max_grid_steps; ++j, alpha *= cfg.gamma) {
    const TikhonovResult& r = solver.solve(alpha);
    if (r.data_residual <= target) {
      return SelectionResult{alpha, r, RuleTag::sequential, solver.evaluations(), previous};
    }
    previous = r.data_residual;
  }
  throw Error(ErrorKind::nonconvergence,
              "sequential discrepancy principle: grid index exceeded " +
                  std::to_string(cfg.max_grid_steps));
}

double apriori_select(double delta, double p, double c) {
  if (!(delta > 0.0)) throw Error(ErrorKind::invalid_parameter, "a priori rule needs delta > 0");
  if (!(p > 0.0 && p <= 2.0)) {
    throw Error(ErrorKind::invalid_parameter, "a priori exponent must lie in (0, 2]");
  }
  if (!(c > 0.0)) throw Error(ErrorKind::invalid_parameter, "a priori constant must be > 0");
  return c * std::pow(delta, p);
}

SelectionResult Selector::select(const ForwardModel& model, const NoisyObservation& obs,
                                 const Element& x_prior) const {
  switch (rule) {
    case Rule::discrepancy:
      return discrepancy_select(model, obs, x_prior, cfg);
    case Rule::sequential:
      return sequential_select(model, obs, x_prior, cfg);
    case Rule::apriori: {
      const double alpha = apriori_select(obs.delta, apriori_exponent, apriori_constant);
      TikhonovResult r = solve_nonlinear(model, alpha, obs.y_noisy, x_prior, x_prior, cfg.solver);
      return SelectionResult{alpha, std::move(r), RuleTag::apriori, 1, {}};
    }
  }
  throw Error(ErrorKind::invalid_input, "unknown rule");
}

AlphaFloorCheck alpha_lower_bound_check(const SelectionResult& selection,
                                        const SelectorConfig& cfg,
                                        std::optional<double> norm_u, double delta) {
  if (!norm_u) {
    throw Error(ErrorKind::hypothesis_violation,
                "alpha floor check needs a nu = 1/2 source element u");
  }
  AlphaFloorCheck out;
  if (*norm_u == 0.0) {
    // x* = x_true: the floor is unbounded unless tau = 1.
    out.bound = cfg.tau > 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
  } else {
    out.bound = (cfg.tau - 1.0) * cfg.gamma * delta / (2.0 * *norm_u);
  }
  out.passed = selection.alpha >= out.bound;
  out.ratio = out.bound > 0.0 ? selection.alpha / out.bound
                              : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace satlab
