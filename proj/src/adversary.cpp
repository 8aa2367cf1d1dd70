#include "satlab/adversary.hpp"

#include "satlab/error.hpp"
#include "satlab/parallel.hpp"
#include "satlab/tikhonov.hpp"

#include <cmath>
#include <limits>

namespace satlab {

Element adversarial_direction(const SpectralDecomposition& d, const SpectralProjector& projector,
                              const Element& misfit) {
  if (projector.empty()) {
    throw Error(ErrorKind::invalid_input,
                "adversarial_direction: band projector selects no eigenvalue");
  }
  if (misfit.size() != d.dim_y()) {
    throw Error(ErrorKind::invalid_input, "adversarial_direction: misfit has wrong dimension");
  }
  const double banded = projector.apply(misfit).norm();
  if (banded > kMisfitZero) return misfit / banded;
  return projector.basis().col(0);
}

AdversarialDatum make_adversarial_datum(const ProblemInstance& instance, double lam_k) {
  const SpectralDecomposition& d = *instance.linearization;
  const Eigen::VectorXd& lam = d.eigenvalues();
  std::size_t index = lam.size();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (std::abs(lam(i) - lam_k) <= 1e-12 * lam_k) {
      index = static_cast<std::size_t>(i);
      break;
    }
  }
  if (index == static_cast<std::size_t>(lam.size())) {
    throw Error(ErrorKind::invalid_input, "make_adversarial_datum: lam_k = " +
                                              std::to_string(lam_k) +
                                              " is not an eigenvalue of AA*");
  }

  AdversarialDatum datum;
  datum.index = index;
  datum.lam_k = lam_k;
  datum.delta_k = lam_k;
  datum.projector = band_projector(d, lam_k);
  const Element misfit = d.apply(instance.x_true - instance.x_prior);
  datum.z_k = adversarial_direction(d, datum.projector, misfit);
  const Element banded = datum.projector.apply(datum.z_k);
  if (std::abs(banded.norm() - 1.0) > 1e-12) {
    throw Error(ErrorKind::experiment, "adversarial datum: ||G z_k|| != 1");
  }
  datum.observation = add_noise(instance, datum.delta_k, -banded);
  return datum;
}

double mdps2_lower_bound(double delta_k, double lam_k, double alpha_k) {
  const double denom = alpha_k + 1.5 * lam_k;
  return delta_k * delta_k * (0.5 * lam_k) / (denom * denom);
}

AdversarialCheck verify_adversarial_inequalities(const ProblemInstance& instance,
                                                 const AdversarialDatum& datum, double alpha_k) {
  const SpectralDecomposition& d = *instance.linearization;
  const Element& xt = instance.x_true;
  const Element noise = datum.observation.y_noisy - instance.y_exact;
  const Element xhat = solve_linearized(d, alpha_k, xt, instance.x_prior, Element::Zero(noise.size()));
  const Element xhat_delta = solve_linearized(d, alpha_k, xt, instance.x_prior, noise);

  AdversarialCheck c;
  c.alpha = alpha_k;
  const Element bias = xhat - xt;
  const Element pert = xhat_delta - xhat;
  c.bias_sq = bias.squaredNorm();
  c.perturbation_sq = pert.squaredNorm();
  c.error_sq = (xhat_delta - xt).squaredNorm();
  c.cross_term = 2.0 * bias.dot(pert);

  const Element misfit = d.apply(xt - instance.x_prior);
  const double banded_misfit = datum.projector.apply(misfit).norm();
  const Element resolved = resolvent_apply_y(d, alpha_k, datum.projector.apply(datum.z_k));
  c.spectral_cross_term = banded_misfit > kMisfitZero
                              ? 2.0 * alpha_k * datum.delta_k * banded_misfit * resolved.squaredNorm()
                              : 0.0;

  c.lower_bound = mdps2_lower_bound(datum.delta_k, datum.lam_k, alpha_k);
  c.pythagoras_residual = std::abs(c.error_sq - c.bias_sq - c.perturbation_sq - c.cross_term);
  c.sign_ok = c.cross_term >= -1e-12;
  c.chain_ok = c.error_sq >= c.perturbation_sq * (1.0 - 1e-10) &&
               c.perturbation_sq >= c.lower_bound * (1.0 - 1e-10);
  return c;
}

std::size_t nearest_band_index(const SpectralDecomposition& d, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorKind::invalid_parameter, "nearest band needs delta > 0");
  const Eigen::VectorXd& lam = d.eigenvalues();
  std::size_t best = 0;
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double g = std::abs(std::log(lam(i)) - std::log(delta));
    if (g < gap) {
      gap = g;
      best = static_cast<std::size_t>(i);
    }
  }
  return best;
}

SupErrorResult sup_error(const ProblemInstance& instance, const Selector& selector, double delta,
                         int n_random, std::uint64_t seed, bool include_adversarial, int jobs) {
  if (!(delta >= 0.0)) throw Error(ErrorKind::invalid_parameter, "sup_error: delta must be >= 0");
  Selector sel = selector;
  if (!sel.cfg.solver.domain) sel.cfg.solver.domain = Ball{instance.x_true, instance.rho()};

  const auto m = instance.y_exact.size();
  std::vector<Element> directions;
  std::vector<std::string> kinds;
  if (delta == 0.0) {
    directions.push_back(Element::Zero(m));
    kinds.emplace_back("exact");
  } else {
    if (include_adversarial) {
      const SpectralDecomposition& d = *instance.linearization;
      const std::size_t k = nearest_band_index(d, delta);
      const SpectralProjector g = band_projector(d, d.eigenvalues()(static_cast<Eigen::Index>(k)));
      const Element misfit = d.apply(instance.x_true - instance.x_prior);
      const Element z = adversarial_direction(d, g, misfit);
      const Element dir = -g.apply(z);
      directions.push_back(dir / dir.norm());
      kinds.emplace_back("adversarial");
    }
    for (int i = 0; i < n_random; ++i) {
      auto rng = seeded_rng(seed, static_cast<std::uint64_t>(i));
      directions.push_back(random_unit(m, rng));
      kinds.emplace_back("random");
    }
  }

  std::vector<DirectionRow> rows(directions.size());
  parallel_for(directions.size(), jobs, [&](std::size_t i) {
    DirectionRow& row = rows[i];
    row.index = i;
    row.kind = kinds[i];
    try {
      if (delta == 0.0) {
        const double alpha = sel.cfg.alpha_min;
        TikhonovResult r = solve_nonlinear(*instance.model, alpha, instance.y_exact,
                                           instance.x_prior, instance.x_prior, sel.cfg.solver);
        row.alpha = alpha;
        row.error = (r.x - instance.x_true).norm();
        row.data_residual = r.data_residual;
        row.converged = r.converged;
        return;
      }
      const NoisyObservation obs = add_noise(instance, delta, directions[i]);
      const SelectionResult s = sel.select(*instance.model, obs, instance.x_prior);
      row.alpha = s.alpha;
      row.error = (s.solution.x - instance.x_true).norm();
      row.data_residual = s.solution.data_residual;
      row.converged = s.solution.converged;
    } catch (const Error& e) {
      row.failure = e.what();
    }
  });

  SupErrorResult out;
  bool any = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].failure.empty()) continue;
    if (!any || rows[i].error > out.worst_error) {
      any = true;
      out.worst_error = rows[i].error;
      out.argmax = i;
    }
  }
  if (!any) {
    throw Error(ErrorKind::experiment,
                "sup_error: every candidate failed at delta = " + std::to_string(delta) +
                    (rows.empty() ? std::string() : " (" + rows.front().failure + ")"));
  }
  out.argmax_direction = directions[out.argmax];
  out.worst_alpha = rows[out.argmax].alpha;
  out.worst_converged = rows[out.argmax].converged;
  out.rows = std::move(rows);
  return out;
}

}  // namespace satlab
