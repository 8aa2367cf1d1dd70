#include "satlab/forward_models.hpp"

#include "satlab/error.hpp"

#include <cmath>
#include <utility>

namespace satlab {

namespace {

// Largest singular value by power iteration on M*M. Never overestimates.
double power_norm(const Eigen::MatrixXd& m, int max_iter = 500) {
  if (m.size() == 0 || m.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m.cols()).normalized();
  double estimate = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = m.transpose() * (m * v);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    const double next = std::sqrt(wn);
    v = w / wn;
    if (std::abs(next - estimate) <= 1e-13 * next) return (m * v).norm();
    estimate = next;
  }
  return (m * v).norm();
}

}  // namespace

const char* to_string(ModelKind kind) {
  return kind == ModelKind::linear ? "linear" : "composition";
}

ForwardModel::ForwardModel(double domain_radius) : domain_radius_(domain_radius) {
  if (!(domain_radius > 0.0)) {
    throw Error(ErrorKind::invalid_parameter, "domain radius must be positive");
  }
}

Eigen::MatrixXd ForwardModel::normal_matrix(const Element& x) const {
  const DenseOperator j = jacobian(x);
  return j.transpose() * j;
}

void ForwardModel::check_x(const Element& x) const {
  if (x.size() != dim_x()) {
    throw Error(ErrorKind::invalid_input, "element of X has dimension " +
                                              std::to_string(x.size()) + ", expected " +
                                              std::to_string(dim_x()));
  }
}

void ForwardModel::check_y(const Element& y) const {
  if (y.size() != dim_y()) {
    throw Error(ErrorKind::invalid_input, "element of Y has dimension " +
                                              std::to_string(y.size()) + ", expected " +
                                              std::to_string(dim_y()));
  }
}

LinearModel::LinearModel(DenseOperator a, double domain_radius)
    : ForwardModel(domain_radius), a_(std::move(a)) {
  if (a_.size() == 0) throw Error(ErrorKind::invalid_input, "linear model: empty operator");
  gram_ = a_.transpose() * a_;
  norm_ = operator_norm(a_);
}

Element LinearModel::apply(const Element& x) const {
  check_x(x);
  return a_ * x;
}

Element LinearModel::derivative_apply(const Element& x, const Element& h) const {
  check_x(x);
  check_x(h);
  return a_ * h;
}

Element LinearModel::derivative_adjoint_apply(const Element& x, const Element& g) const {
  check_x(x);
  check_y(g);
  return a_.transpose() * g;
}

DenseOperator LinearModel::jacobian(const Element& x) const {
  check_x(x);
  return a_;
}

Eigen::MatrixXd LinearModel::normal_matrix(const Element& x) const {
  check_x(x);
  return gram_;
}

AnalyticConstants LinearModel::analytic_constants() const {
  return AnalyticConstants{0.0, 0.0, norm_, norm_};
}

CompositionModel::CompositionModel(DenseOperator a, double beta, double domain_radius)
    : ForwardModel(domain_radius), a_(std::move(a)), beta_(beta) {
  if (a_.size() == 0) throw Error(ErrorKind::invalid_input, "composition model: empty operator");
  if (!(beta >= 0.0) || !(beta < 1.0)) {
    throw Error(ErrorKind::invalid_parameter,
                "composition model: beta must lie in [0, 1), got " + std::to_string(beta));
  }
  gram_ = a_.transpose() * a_;
  norm_ = operator_norm(a_);
}

Element CompositionModel::inner_map(const Element& x) const {
  return x + beta_ * x.array().sin().matrix();
}

Element CompositionModel::inner_derivative(const Element& x) const {
  return (1.0 + beta_ * x.array().cos()).matrix();
}

Element CompositionModel::range_invariance_factor(const Element& x, const Element& z) const {
  check_x(x);
  check_x(z);
  return inner_derivative(x).cwiseQuotient(inner_derivative(z));
}

Element CompositionModel::apply(const Element& x) const {
  check_x(x);
  return a_ * inner_map(x);
}

Element CompositionModel::derivative_apply(const Element& x, const Element& h) const {
  check_x(x);
  check_x(h);
  return a_ * inner_derivative(x).cwiseProduct(h);
}

Element CompositionModel::derivative_adjoint_apply(const Element& x, const Element& g) const {
  check_x(x);
  check_y(g);
  return inner_derivative(x).cwiseProduct(a_.transpose() * g);
}

DenseOperator CompositionModel::jacobian(const Element& x) const {
  check_x(x);
  return a_ * inner_derivative(x).asDiagonal();
}

Eigen::MatrixXd CompositionModel::normal_matrix(const Element& x) const {
  check_x(x);
  const Element d = inner_derivative(x);
  return d.asDiagonal() * gram_ * d.asDiagonal();
}

AnalyticConstants CompositionModel::analytic_constants() const {
  // |g''| <= beta gives L <= beta ||A||; g' in [1 - beta, 1 + beta] gives the rest.
  return AnalyticConstants{beta_ * norm_, beta_ / (1.0 - beta_), (1.0 + beta_) * norm_, norm_};
}

DenseOperator diagonal_operator(int n, double s, double scale) {
  if (n < 1) throw Error(ErrorKind::invalid_input, "diagonal operator needs n >= 1");
  Eigen::VectorXd diag(n);
  for (int i = 0; i < n; ++i) diag(i) = scale * std::pow(static_cast<double>(i + 1), -s);
  return diag.asDiagonal();
}

std::shared_ptr<const LinearModel> make_diagonal_linear(int n, double s, double scale,
                                                        double domain_radius) {
  if (n < 2) throw Error(ErrorKind::invalid_input, "make_diagonal_linear: n must be >= 2");
  if (!(s > 0.0)) throw Error(ErrorKind::invalid_parameter, "make_diagonal_linear: s must be > 0");
  if (!(scale > 0.0)) {
    throw Error(ErrorKind::invalid_parameter, "make_diagonal_linear: scale must be > 0");
  }
  return std::make_shared<const LinearModel>(diagonal_operator(n, s, scale), domain_radius);
}

std::shared_ptr<const CompositionModel> make_composition_model(const DenseOperator& a,
                                                               double beta,
                                                               double domain_radius) {
  return std::make_shared<const CompositionModel>(a, beta, domain_radius);
}

Element harmonic_element(Eigen::Index n) {
  Element v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 / static_cast<double>(i + 1);
  return v / v.norm();
}

Element random_unit(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Element v(n);
  double len = 0.0;
  do {
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    len = v.norm();
  } while (len == 0.0);
  return v / len;
}

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

bool ProblemInstance::in_domain(const Element& x) const {
  return (x - x_true).norm() < rho();
}

namespace {

ProblemInstance finish_instance(std::shared_ptr<const ForwardModel> model, const Element& x_true,
                                Element x_prior, std::optional<SourcePrior> source,
                                std::shared_ptr<const SpectralDecomposition> lin) {
  ProblemInstance inst;
  inst.y_exact = model->apply(x_true);
  inst.model = std::move(model);
  inst.x_true = x_true;
  inst.x_prior = std::move(x_prior);
  inst.source = std::move(source);
  inst.linearization = std::move(lin);
  if (!inst.in_domain(inst.x_prior)) {
    throw Error(ErrorKind::domain, "prior guess lies outside B_rho(x_true): ||x* - x_true|| = " +
                                       std::to_string((inst.x_prior - x_true).norm()) +
                                       ", rho = " + std::to_string(inst.rho()));
  }
  return inst;
}

}  // namespace

ProblemInstance synthesize_instance(std::shared_ptr<const ForwardModel> model,
                                    const Element& x_true, const SourcePrior& source,
                                    bool enforce_lipschitz_bound) {
  if (!model) throw Error(ErrorKind::invalid_input, "synthesize_instance: null model");
  if (x_true.size() != model->dim_x()) {
    throw Error(ErrorKind::invalid_input, "synthesize_instance: x_true has wrong dimension");
  }
  auto lin = std::make_shared<const SpectralDecomposition>(decompose(model->jacobian(x_true)));

  SourcePrior stored = source;
  Element x_prior;
  if (source.nu == 0.5) {
    if (source.element.size() != model->dim_y()) {
      throw Error(ErrorKind::invalid_input, "source element u must live in Y");
    }
    stored.element = project_onto_range(*lin, source.element);
    stored.element_norm = stored.element.norm();
    x_prior = x_true - lin->adjoint_apply(stored.element);
    const double l_u = model->analytic_constants().lipschitz * stored.element_norm;
    if (enforce_lipschitz_bound && !(l_u < 1.0)) {
      throw Error(ErrorKind::hypothesis_violation,
                  "source condition requires L*||u|| < 1, got " + std::to_string(l_u));
    }
  } else if (source.nu >= 1.0) {
    if (source.element.size() != model->dim_x()) {
      throw Error(ErrorKind::invalid_input, "source element w must live in X");
    }
    stored.element_norm = source.element.norm();
    x_prior = x_true - normal_power_apply(*lin, source.nu, source.element);
  } else {
    throw Error(ErrorKind::invalid_parameter,
                "source exponent must be 1/2 or >= 1, got " + std::to_string(source.nu));
  }
  return finish_instance(std::move(model), x_true, std::move(x_prior), std::move(stored),
                         std::move(lin));
}

ProblemInstance make_instance(std::shared_ptr<const ForwardModel> model, const Element& x_true,
                              const Element& x_prior) {
  if (!model) throw Error(ErrorKind::invalid_input, "make_instance: null model");
  if (x_true.size() != model->dim_x() || x_prior.size() != model->dim_x()) {
    throw Error(ErrorKind::invalid_input, "make_instance: element dimension mismatch");
  }
  auto lin = std::make_shared<const SpectralDecomposition>(decompose(model->jacobian(x_true)));
  return finish_instance(std::move(model), x_true, x_prior, std::nullopt, std::move(lin));
}

double estimate_lipschitz(const ForwardModel& model, const Element& center, int n_samples,
                          std::uint64_t seed) {
  if (center.size() != model.dim_x()) {
    throw Error(ErrorKind::invalid_input, "estimate_lipschitz: center has wrong dimension");
  }
  const double rho = model.domain_radius();
  const auto n = model.dim_x();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double best = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    auto rng = seeded_rng(seed, static_cast<std::uint64_t>(k));
    // Radii kept strictly inside the open ball.
    const Element x = center + 0.999 * rho * unit(rng) * random_unit(n, rng);
    const Element z = center + 0.999 * rho * unit(rng) * random_unit(n, rng);
    const double dist = (x - z).norm();
    if (dist == 0.0) continue;
    const double ratio = power_norm(model.jacobian(x) - model.jacobian(z)) / dist;
    if (ratio > best) best = ratio;
  }
  return best;
}

NoisyObservation add_noise(const ProblemInstance& instance, double delta,
                           const Element& direction) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw Error(ErrorKind::invalid_parameter, "noise level must be nonnegative");
  }
  if (direction.size() != instance.y_exact.size()) {
    throw Error(ErrorKind::invalid_input, "noise direction has wrong dimension");
  }
  if (std::abs(direction.norm() - 1.0) > 1e-12) {
    throw Error(ErrorKind::invalid_input, "noise direction must have unit norm, got " +
                                              std::to_string(direction.norm()));
  }
  NoisyObservation obs{instance.y_exact + delta * direction, delta};
  const double actual = (obs.y_noisy - instance.y_exact).norm();
  if (actual > delta + 1e-12 * std::max(1.0, delta)) {
    throw Error(ErrorKind::invalid_input, "noisy data violates the noise bound");
  }
  return obs;
}

}  // namespace satlab
