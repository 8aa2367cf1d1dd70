#include "satlab/saturation_lab.hpp"

#include "satlab/error.hpp"
#include "satlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace satlab {

SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw Error(ErrorKind::invalid_input, "fit_slope: need >= 2 points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) {
      throw Error(ErrorKind::invalid_input, "fit_slope: coordinates must be positive");
    }
    sx += std::log(x);
    sy += std::log(y);
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mx, dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 1e-300) throw Error(ErrorKind::invalid_input, "fit_slope: x values are degenerate");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (const auto& [x, y] : points) {
    const double e = std::log(y) - (fit.intercept + fit.slope * std::log(x));
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return fit;
}

std::vector<double> geometric_grid(double hi, double lo, int count) {
  if (count < 2 || !(hi > lo) || !(lo > 0.0)) {
    throw Error(ErrorKind::invalid_input, "geometric_grid: need hi > lo > 0 and count >= 2");
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double step = std::log(lo / hi) / (count - 1);
  for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = hi * std::exp(step * i);
  grid.back() = lo;
  return grid;
}

RateReport rate_experiment(const ProblemInstance& instance, const Selector& selector,
                           const std::vector<double>& delta_grid, const RateOptions& opts) {
  if (delta_grid.size() < 4) {
    throw Error(ErrorKind::invalid_input, "rate_experiment: delta grid needs >= 4 points");
  }
  for (std::size_t i = 0; i < delta_grid.size(); ++i) {
    if (!(delta_grid[i] > 0.0) || (i > 0 && !(delta_grid[i] < delta_grid[i - 1]))) {
      throw Error(ErrorKind::invalid_input,
                  "rate_experiment: delta grid must be positive and strictly decreasing");
    }
  }

  std::vector<std::optional<SupErrorResult>> cells(delta_grid.size());
  std::vector<std::string> reasons(delta_grid.size());
  parallel_for(delta_grid.size(), opts.jobs, [&](std::size_t i) {
    try {
      cells[i] = sup_error(instance, selector, delta_grid[i], opts.n_random, opts.seed,
                           opts.include_adversarial, 1);
    } catch (const Error& e) {
      reasons[i] = e.what();
    }
  });

  RateReport report;
  std::vector<std::pair<double, double>> points;
  for (std::size_t i = 0; i < delta_grid.size(); ++i) {
    if (!cells[i]) {
      report.failures.emplace_back(delta_grid[i], reasons[i]);
      continue;
    }
    const SupErrorResult& cell = *cells[i];
    RateSample s;
    s.delta = delta_grid[i];
    s.worst_error = cell.worst_error;
    s.alpha = cell.worst_alpha;
    s.rule = to_string(selector.rule);
    s.converged = cell.worst_converged;
    if (s.converged && s.worst_error > 0.0) points.emplace_back(s.delta, s.worst_error);
    report.samples.push_back(std::move(s));
    report.details.push_back(cell);
  }
  if (points.size() < 3) {
    throw Error(ErrorKind::insufficient_data,
                "rate_experiment: fewer than 3 converged samples (" +
                    std::to_string(points.size()) + ")");
  }
  report.fit = fit_slope(points);
  return report;
}

SaturationReport saturation_probe(const ProblemInstance& instance, const Selector& selector,
                                  std::size_t k_first, std::size_t k_last, int jobs) {
  if ((instance.x_prior - instance.x_true).norm() == 0.0) {
    throw Error(ErrorKind::hypothesis_violation,
                "saturation probe is vacuous when the prior guess equals the solution");
  }
  const SpectralDecomposition& d = *instance.linearization;
  if (k_first < 1 || k_last < k_first || k_last > d.rank()) {
    throw Error(ErrorKind::invalid_input, "saturation probe: k range outside the spectrum");
  }
  Selector sel = selector;
  if (!sel.cfg.solver.domain) sel.cfg.solver.domain = Ball{instance.x_true, instance.rho()};

  std::vector<SaturationRow> rows(k_last - k_first + 1);
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    SaturationRow& row = rows[i];
    row.k = k_first + i;
    row.lam_k = d.eigenvalues()(static_cast<Eigen::Index>(row.k - 1));
    row.delta_k = row.lam_k;
    row.isolated = band_projector(d, row.lam_k).selected_indices().size() == 1;
    try {
      const AdversarialDatum datum = make_adversarial_datum(instance, row.lam_k);
      const SelectionResult s = sel.select(*instance.model, datum.observation, instance.x_prior);
      row.alpha_k = s.alpha;
      row.error_k = (s.solution.x - instance.x_true).norm();
      row.ratio_k = row.error_k / std::sqrt(row.delta_k);
      row.delta_over_alpha = row.delta_k / row.alpha_k;
      row.check = verify_adversarial_inequalities(instance, datum, s.alpha);
      row.checks_passed = row.check.passed();
      row.flagged = !row.checks_passed || !s.solution.converged;
      if (!s.solution.converged) row.note = "solver did not converge";
    } catch (const Error& e) {
      row.flagged = true;
      row.note = e.what();
    }
  });

  SaturationReport report;
  report.rows = std::move(rows);
  std::vector<const SaturationRow*> good;
  for (const auto& r : report.rows) {
    if (r.alpha_k > 0.0) good.push_back(&r);
  }
  if (good.empty()) {
    throw Error(ErrorKind::experiment, "saturation probe: every row failed");
  }
  report.first_ratio = good.front()->ratio_k;
  report.first_delta_over_alpha = good.front()->delta_over_alpha;
  report.ratio_floor = std::numeric_limits<double>::infinity();
  report.tail_delta_over_alpha = std::numeric_limits<double>::infinity();
  for (std::size_t i = good.size() / 2; i < good.size(); ++i) {
    report.ratio_floor = std::min(report.ratio_floor, good[i]->ratio_k);
    report.tail_delta_over_alpha = std::min(report.tail_delta_over_alpha, good[i]->delta_over_alpha);
  }
  return report;
}

int LemmaReport::violations() const {
  int v = 0;
  for (const auto& r : rows) {
    if (r.converged && (!r.error_ok || !r.residual_ok)) ++v;
  }
  return v;
}

int LemmaReport::converged_count() const {
  return static_cast<int>(
      std::count_if(rows.begin(), rows.end(), [](const LemmaRow& r) { return r.converged; }));
}

LemmaReport lemma_f22_check(const ProblemInstance& instance, const std::vector<double>& alpha_grid,
                            const NoisyObservation& obs, const SolverOptions& opts) {
  if (!instance.source || !instance.source->is_half()) {
    throw Error(ErrorKind::hypothesis_violation,
                "residual/error bounds need a source x_true - x* = A* u");
  }
  LemmaReport report;
  report.delta = obs.delta;
  report.norm_u = instance.source->element_norm;
  report.lipschitz = instance.model->analytic_constants().lipschitz;
  const double l_u = report.lipschitz * report.norm_u;
  if (!(l_u < 1.0)) {
    throw Error(ErrorKind::hypothesis_violation,
                "bounds require L*||u|| < 1, got " + std::to_string(l_u));
  }

  std::vector<double> grid = alpha_grid;
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  SolverOptions sopts = opts;
  if (!sopts.domain) sopts.domain = Ball{instance.x_true, instance.rho()};
  const auto path =
      continuation_solve(*instance.model, grid, obs.y_noisy, instance.x_prior, sopts);

  for (const auto& r : path) {
    LemmaRow row;
    row.alpha = r.alpha;
    row.converged = r.ok() && r.converged;
    row.x = r.x;
    row.error = (r.x - instance.x_true).norm();
    row.residual = r.data_residual;
    row.error_bound =
        (obs.delta + r.alpha * report.norm_u) / std::sqrt(r.alpha * (1.0 - l_u));
    row.residual_bound = obs.delta + 2.0 * r.alpha * report.norm_u;
    row.error_ok = row.error <= row.error_bound;
    row.residual_ok = row.residual <= row.residual_bound;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::vector<ComparisonRow> compare_with_linearization(const ProblemInstance& instance,
                                                      const NoisyObservation& obs,
                                                      const LemmaReport& lemma, double factor) {
  const Element noise = obs.y_noisy - instance.y_exact;
  std::vector<ComparisonRow> out;
  for (const auto& row : lemma.rows) {
    if (!row.converged) continue;
    ComparisonRow c;
    c.alpha = row.alpha;
    c.nonlinear_error = (row.x - instance.x_true).norm();
    c.linearized_error =
        (solve_linearized(*instance.linearization, row.alpha, instance.x_true, instance.x_prior,
                          noise) -
         instance.x_true)
            .norm();
    c.factor = factor;
    c.passed = c.linearized_error <= factor * c.nonlinear_error * (1.0 + kComparisonSlack);
    out.push_back(c);
  }
  return out;
}

double linearization_identity_gap(const ProblemInstance& instance, const NoisyObservation& obs,
                                  const TikhonovResult& solution) {
  const SpectralDecomposition& d = *instance.linearization;
  const ForwardModel& model = *instance.model;
  const Element& x = solution.x;
  const Element& xt = instance.x_true;
  const double alpha = solution.alpha;

  const Element xhat =
      solve_linearized(d, alpha, xt, instance.x_prior, obs.y_noisy - instance.y_exact);
  const Element fx = model.apply(x);
  const Element taylor_remainder = fx - instance.y_exact - d.apply(x - xt);
  const Element data_gap = obs.y_noisy - fx;
  const Element derivative_mismatch =
      model.derivative_adjoint_apply(x, data_gap) - d.adjoint_apply(data_gap);
  const Element rhs = -resolvent_apply(d, alpha, d.adjoint_apply(taylor_remainder)) +
                      resolvent_apply(d, alpha, derivative_mismatch);
  const Element lhs = x - xhat;
  const double scale = std::max({lhs.norm(), (x - xt).norm(), 1e-300});
  return (lhs - rhs).norm() / scale;
}

ConstantReport constant_report(const ProblemInstance& instance, const SelectorConfig& cfg,
                               int lipschitz_samples, std::uint64_t seed) {
  const AnalyticConstants k = instance.model->analytic_constants();
  ConstantReport r;
  r.rho = instance.rho();
  r.kappa0 = k.kappa0;
  r.lipschitz = k.lipschitz;
  r.lipschitz_sampled =
      estimate_lipschitz(*instance.model, instance.x_true, lipschitz_samples, seed);
  r.prior_distance = (instance.x_prior - instance.x_true).norm();
  r.c0_range_invariance = (1.5 * r.rho + r.prior_distance) * r.kappa0;
  r.c1 = k.derivative_bound;

  if (instance.source && instance.source->is_half()) {
    r.norm_u = instance.source->element_norm;
    r.lipschitz_times_norm_u = r.lipschitz * *r.norm_u;
  } else {
    r.lipschitz_times_norm_u = std::numeric_limits<double>::quiet_NaN();
  }

  const double tg = (cfg.tau - 1.0) * cfg.gamma;
  const double l_u = r.lipschitz_times_norm_u;
  if (tg > 0.0 && std::isfinite(l_u) && l_u < 1.0) {
    r.c0_lipschitz = 2.0 + 2.0 / tg + (2.0 + tg) / (4.0 * tg * std::sqrt(1.0 - l_u));
  } else if (tg > 0.0 && r.lipschitz == 0.0) {
    r.c0_lipschitz = 2.0 + 2.0 / tg + (2.0 + tg) / (4.0 * tg);
  } else {
    r.c0_lipschitz = std::numeric_limits<double>::infinity();
  }
  if (r.lipschitz == 0.0) {
    r.comparison_factor = 1.0;
  } else if (std::isfinite(l_u) && std::isfinite(r.c0_lipschitz)) {
    r.comparison_factor = 1.0 + r.c0_lipschitz * l_u;
  } else {
    r.comparison_factor = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

}  // namespace satlab
