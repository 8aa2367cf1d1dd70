#include "satlab/tikhonov.hpp"

#include "satlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace satlab {

namespace {

void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::invalid_parameter,
                "regularization parameter must be positive, got " + std::to_string(alpha));
  }
}

// sqrt of the top eigenvalue of a symmetric PSD matrix, by power iteration.
double top_singular_from_normal(const Eigen::MatrixXd& normal) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(normal.cols()).normalized();
  double lam = 0.0;
  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd w = normal * v;
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / wn;
    if (std::abs(next - lam) <= 1e-12 * next) {
      lam = next;
      break;
    }
    lam = next;
  }
  return std::sqrt(std::max(lam, 0.0));
}

struct Evaluation {
  Element residual;  // F(x) - y
  double functional;
};

Evaluation evaluate(const ForwardModel& model, const Element& x, double alpha, const Element& y,
                    const Element& x_prior) {
  Evaluation e{model.apply(x) - y, 0.0};
  e.functional = e.residual.squaredNorm() + alpha * (x - x_prior).squaredNorm();
  return e;
}

// The second term is the rounding error of evaluating the gradient itself:
// alpha (x - x*) and F'(x)*(F(x) - y) lose about eps * alpha ||x|| and
// eps * ||F'|| ||y|| to cancellation, which dominates only for huge alpha.
double tolerance_from(double derivative_norm, double data_residual, double alpha,
                      const Element& x, const Element& x_prior, double y_norm,
                      const SolverOptions& opts) {
  const double eps = std::numeric_limits<double>::epsilon();
  const double rounding = 8.0 * eps *
                          (alpha * (x.norm() + x_prior.norm()) +
                           derivative_norm * (2.0 * y_norm + data_residual));
  return opts.euler_rel_tol * (derivative_norm * data_residual + alpha * (x - x_prior).norm() +
                               opts.euler_floor) +
         rounding;
}

TikhonovResult gauss_newton(const ForwardModel& model, double alpha, const Element& y,
                            const Element& x_prior, const Element& x_init,
                            const SolverOptions& opts) {
  TikhonovResult res;
  res.alpha = alpha;
  Element x = x_init;
  Evaluation cur = evaluate(model, x, alpha, y, x_prior);
  const double y_norm = y.norm();

  for (;;) {
    const Element grad = model.derivative_adjoint_apply(x, cur.residual) + alpha * (x - x_prior);
    Eigen::MatrixXd normal = model.normal_matrix(x);
    res.euler_residual = grad.norm();
    res.euler_tolerance = tolerance_from(top_singular_from_normal(normal), cur.residual.norm(),
                                         alpha, x, x_prior, y_norm, opts);
    if (res.euler_residual <= res.euler_tolerance) {
      res.converged = true;
      break;
    }
    if (res.iterations >= opts.max_iterations) break;

    normal.diagonal().array() += alpha;
    Eigen::LLT<Eigen::MatrixXd> llt(normal);
    Element step;
    if (llt.info() == Eigen::Success) {
      step = -llt.solve(grad);
    } else {
      step = -normal.ldlt().solve(grad);
    }

    // Accept ties at the rounding floor so refinement steps are not rejected.
    const double accept_slack = 4.0 * std::numeric_limits<double>::epsilon() * cur.functional;
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      const Element trial = x + t * step;
      Evaluation next = evaluate(model, trial, alpha, y, x_prior);
      if (std::isfinite(next.functional) && next.functional <= cur.functional + accept_slack) {
        x = trial;
        cur = std::move(next);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    ++res.iterations;
    if (!accepted) {
      // Line search exhausted: stationary to working precision or stuck.
      break;
    }
  }

  res.x = std::move(x);
  res.data_residual = cur.residual.norm();
  res.functional_value = cur.functional;
  if (opts.domain && !opts.domain->contains(res.x)) {
    res.converged = false;
  }
  return res;
}

Element perturbed_start(const Element& x_prior, const SolverOptions& opts, std::uint64_t index,
                        double radius) {
  auto rng = seeded_rng(opts.seed, index);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Element start = x_prior + 0.5 * radius * unit(rng) * random_unit(x_prior.size(), rng);
  if (opts.domain) {
    const Element offset = start - opts.domain->center;
    const double dist = offset.norm();
    const double limit = 0.99 * opts.domain->radius;
    if (dist >= limit) start = opts.domain->center + offset * (limit / dist);
  }
  return start;
}

// Lower functional wins; near-ties go to the candidate closest to the prior.
bool better(const TikhonovResult& a, const TikhonovResult& b, const Element& x_prior) {
  if (a.converged != b.converged) return a.converged;
  const double scale = std::max({a.functional_value, b.functional_value, 1e-300});
  if (std::abs(a.functional_value - b.functional_value) <= 1e-14 * scale) {
    return (a.x - x_prior).norm() < (b.x - x_prior).norm();
  }
  return a.functional_value < b.functional_value;
}

}  // namespace

double tikhonov_functional(const ForwardModel& model, const Element& x, double alpha,
                           const Element& y_noisy, const Element& x_prior) {
  return evaluate(model, x, alpha, y_noisy, x_prior).functional;
}

double euler_residual(const ForwardModel& model, const Element& x, double alpha,
                      const Element& y_noisy, const Element& x_prior) {
  const Element r = model.apply(x) - y_noisy;
  return (model.derivative_adjoint_apply(x, r) + alpha * (x - x_prior)).norm();
}

double euler_tolerance(const ForwardModel& model, const Element& x, double alpha,
                       const Element& y_noisy, const Element& x_prior,
                       const SolverOptions& opts) {
  const double jnorm = top_singular_from_normal(model.normal_matrix(x));
  return tolerance_from(jnorm, (model.apply(x) - y_noisy).norm(), alpha, x, x_prior,
                        y_noisy.norm(), opts);
}

Element solve_linearized(const SpectralDecomposition& d, double alpha, const Element& x_true,
                         const Element& x_prior, const Element& noise_vec) {
  require_alpha(alpha);
  if (x_true.size() != d.dim_x() || x_prior.size() != d.dim_x() ||
      noise_vec.size() != d.dim_y()) {
    throw Error(ErrorKind::invalid_input, "solve_linearized: dimension mismatch");
  }
  const Element rhs = alpha * (x_prior - x_true) + d.adjoint_apply(noise_vec);
  return x_true + resolvent_apply(d, alpha, rhs);
}

TikhonovResult solve_nonlinear(const ForwardModel& model, double alpha, const Element& y_noisy,
                               const Element& x_prior, const Element& x_init,
                               const SolverOptions& opts) {
  require_alpha(alpha);
  if (y_noisy.size() != model.dim_y() || x_prior.size() != model.dim_x() ||
      x_init.size() != model.dim_x()) {
    throw Error(ErrorKind::invalid_input, "solve_nonlinear: dimension mismatch");
  }
  if (opts.domain && !opts.domain->contains(x_init)) {
    throw Error(ErrorKind::domain, "solve_nonlinear: initial guess outside the domain ball");
  }

  TikhonovResult best = gauss_newton(model, alpha, y_noisy, x_prior, x_init, opts);
  const double radius = opts.domain ? opts.domain->radius : model.domain_radius();
  for (int k = 0; k < opts.multistart; ++k) {
    const Element start = perturbed_start(x_prior, opts, static_cast<std::uint64_t>(k), radius);
    TikhonovResult cand = gauss_newton(model, alpha, y_noisy, x_prior, start, opts);
    if (better(cand, best, x_prior)) best = std::move(cand);
  }
  return best;
}

std::vector<TikhonovResult> continuation_solve(const ForwardModel& model,
                                               const std::vector<double>& alpha_grid,
                                               const Element& y_noisy, const Element& x_prior,
                                               const SolverOptions& opts) {
  if (alpha_grid.empty()) throw Error(ErrorKind::invalid_input, "continuation grid is empty");
  for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
    if (!(alpha_grid[i] > 0.0)) {
      throw Error(ErrorKind::invalid_parameter, "continuation grid must be positive");
    }
    if (i > 0 && !(alpha_grid[i] < alpha_grid[i - 1])) {
      throw Error(ErrorKind::invalid_input, "continuation grid must be strictly decreasing");
    }
  }
  std::vector<TikhonovResult> path;
  path.reserve(alpha_grid.size());
  Element warm = x_prior;
  for (double alpha : alpha_grid) {
    try {
      TikhonovResult r = solve_nonlinear(model, alpha, y_noisy, x_prior, warm, opts);
      if (!opts.domain || opts.domain->contains(r.x)) warm = r.x;
      path.push_back(std::move(r));
    } catch (const Error& e) {
      TikhonovResult failed;
      failed.alpha = alpha;
      failed.x = warm;
      failed.failure = e.what();
      path.push_back(std::move(failed));
    }
  }
  return path;
}

}  // namespace satlab
