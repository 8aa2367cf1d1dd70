#include "satlab/error.hpp"
#include "satlab/tikhonov.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace satlab;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

// Direct minimizer of ||A x - y||^2 + alpha ||x - x*||^2 from the normal equations.
Element normal_equation_solution(const Eigen::MatrixXd& a, double alpha, const Element& y,
                                 const Element& x_prior) {
  const Eigen::MatrixXd n =
      a.transpose() * a + alpha * Eigen::MatrixXd::Identity(a.cols(), a.cols());
  return n.ldlt().solve(a.transpose() * y + alpha * x_prior);
}

Element vec2(double a, double b) {
  Element v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST(Linearized, ExactDataAndTruePriorReturnTruth) {
  const SpectralDecomposition d = decompose(random_matrix(5, 4, 1));
  const Element xt = Element::LinSpaced(4, 0.1, 0.4);
  for (double alpha : {1e-6, 1e-2, 10.0}) {
    const Element x = solve_linearized(d, alpha, xt, xt, Element::Zero(5));
    EXPECT_LE((x - xt).norm(), 1e-15);
  }
}

TEST(Linearized, DiagonalHandEvaluation) {
  DenseOperator a = DenseOperator::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 0.5;
  const Element x = solve_linearized(decompose(a), 1.0, vec2(1, 1), vec2(0, 0), Element::Zero(2));
  EXPECT_NEAR(x(0), 0.5, 1e-15);
  EXPECT_NEAR(x(1), 0.2, 1e-15);
}

TEST(Linearized, NormalEquationOracle) {
  for (unsigned s = 0; s < 5; ++s) {
    const Eigen::MatrixXd a = random_matrix(7, 5, 10 + s);
    const SpectralDecomposition d = decompose(a);
    const Element xt = random_matrix(5, 1, 20 + s).col(0);
    const Element xp = random_matrix(5, 1, 30 + s).col(0);
    const Element noise = 1e-2 * random_matrix(7, 1, 40 + s).col(0);
    for (double alpha : {1e-3, 0.1, 5.0}) {
      const Element got = solve_linearized(d, alpha, xt, xp, noise);
      const Element want = normal_equation_solution(a, alpha, a * xt + noise, xp);
      EXPECT_LE((got - want).norm(), 1e-10 * want.norm());
    }
  }
}

TEST(Linearized, RejectsNonPositiveAlpha) {
  const SpectralDecomposition d = decompose(Eigen::MatrixXd::Identity(2, 2));
  EXPECT_THROW(solve_linearized(d, 0.0, vec2(1, 1), vec2(0, 0), Element::Zero(2)), Error);
}

TEST(Nonlinear, LinearModelMatchesClosedForm) {
  const Eigen::MatrixXd a = random_matrix(6, 6, 3) / 3.0;
  auto model = std::make_shared<const LinearModel>(a, 10.0);
  const SpectralDecomposition d = decompose(a);
  const Element xt = random_matrix(6, 1, 4).col(0) * 0.3;
  const Element xp = Element::Zero(6);
  auto rng = seeded_rng(2, 0);
  const Element noise = 1e-3 * random_unit(6, rng);
  for (double alpha : {1e-5, 1e-2, 1.0}) {
    const TikhonovResult r = solve_nonlinear(*model, alpha, a * xt + noise, xp, xp);
    EXPECT_TRUE(r.converged);
    EXPECT_LE((r.x - solve_linearized(d, alpha, xt, xp, noise)).norm(), 1e-8);
    EXPECT_LE(r.euler_residual, r.euler_tolerance);
  }
}

TEST(Nonlinear, HugeAlphaStaysAtPrior) {
  const auto model = make_composition_model(diagonal_operator(8, 1.0), 0.1, 2.0);
  const Element xt = harmonic_element(8);
  const Element xp = 0.5 * xt;
  const TikhonovResult r = solve_nonlinear(*model, 1e9, model->apply(xt), xp, xp);
  EXPECT_TRUE(r.converged);
  EXPECT_LE((r.x - xp).norm(), 1e-6);
}

TEST(Nonlinear, ExactDataAndTruePriorRecoverTruth) {
  const auto model = make_composition_model(diagonal_operator(10, 1.0), 0.15, 1.0);
  const Element xt = harmonic_element(10);
  const Element y = model->apply(xt);
  SolverOptions opts;
  opts.domain = Ball{xt, 1.0};
  auto rng = seeded_rng(8, 0);
  const Element start = xt + 0.3 * random_unit(10, rng);
  for (double alpha : {1.0, 1e-2, 1e-4}) {
    const TikhonovResult r = solve_nonlinear(*model, alpha, y, xt, start, opts);
    EXPECT_TRUE(r.converged);
    EXPECT_LE((r.x - xt).norm(), 1e-8);
    EXPECT_LE(tikhonov_functional(*model, r.x, alpha, y, xt), 1e-16);
  }
}

TEST(Nonlinear, FunctionalBelowFeasibleComparators) {
  const auto model = make_composition_model(diagonal_operator(30, 2.0), 0.1, 3.0);
  const Element xt = harmonic_element(30);
  const ProblemInstance inst = synthesize_instance(model, xt, SourcePrior{0.5, xt * 2.0, 0}, true);
  auto rng = seeded_rng(4, 0);
  const NoisyObservation obs = add_noise(inst, 1e-3, random_unit(30, rng));
  SolverOptions opts;
  opts.domain = Ball{xt, inst.rho()};
  for (double alpha : {1.0, 1e-2, 1e-4, 1e-6}) {
    const TikhonovResult r =
        solve_nonlinear(*model, alpha, obs.y_noisy, inst.x_prior, inst.x_prior, opts);
    ASSERT_TRUE(r.converged);
    EXPECT_LE(r.euler_residual, r.euler_tolerance);
    const double at_prior = tikhonov_functional(*model, inst.x_prior, alpha, obs.y_noisy,
                                                inst.x_prior);
    const double at_truth = tikhonov_functional(*model, xt, alpha, obs.y_noisy, inst.x_prior);
    EXPECT_LE(r.functional_value, at_prior + 1e-12);
    EXPECT_LE(r.functional_value, at_truth + 1e-12);
    EXPECT_NEAR(r.functional_value,
                tikhonov_functional(*model, r.x, alpha, obs.y_noisy, inst.x_prior), 1e-15);
  }
}

TEST(Nonlinear, MultistartIsDeterministic) {
  const auto model = make_composition_model(diagonal_operator(12, 1.0), 0.2, 2.0);
  const Element xt = harmonic_element(12);
  SolverOptions opts;
  opts.domain = Ball{xt, 2.0};
  opts.multistart = 3;
  opts.seed = 11;
  const Element y = model->apply(xt);
  const TikhonovResult a = solve_nonlinear(*model, 1e-3, y, 0.5 * xt, 0.5 * xt, opts);
  const TikhonovResult b = solve_nonlinear(*model, 1e-3, y, 0.5 * xt, 0.5 * xt, opts);
  EXPECT_EQ(a.x, b.x);
  EXPECT_TRUE(a.converged);
}

TEST(Nonlinear, StartOutsideDomainIsDomainError) {
  const auto model = make_composition_model(diagonal_operator(4, 1.0), 0.1, 1.0);
  const Element xt = harmonic_element(4);
  SolverOptions opts;
  opts.domain = Ball{xt, 1.0};
  try {
    solve_nonlinear(*model, 1.0, model->apply(xt), xt, xt + 2.0 * xt, opts);
    FAIL() << "expected domain error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(Nonlinear, IterationCapReportsNotConverged) {
  const auto model = make_composition_model(diagonal_operator(10, 2.0), 0.2, 5.0);
  const Element xt = harmonic_element(10);
  SolverOptions opts;
  opts.max_iterations = 1;
  const TikhonovResult r = solve_nonlinear(*model, 1e-8, model->apply(xt), Element::Zero(10),
                                           Element::Zero(10), opts);
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.iterations, 1);
}

TEST(Euler, ZeroAtClosedFormMinimizer) {
  const auto model = make_diagonal_linear(20, 1.5);
  const SpectralDecomposition d = decompose(model->base_operator());
  const Element xt = harmonic_element(20);
  const Element xp = 0.2 * xt;
  auto rng = seeded_rng(6, 0);
  const Element noise = 1e-2 * random_unit(20, rng);
  for (double alpha : {1e-4, 1e-1, 3.0}) {
    const Element x = solve_linearized(d, alpha, xt, xp, noise);
    EXPECT_LE(euler_residual(*model, x, alpha, model->apply(xt) + noise, xp), 1e-10);
  }
}

TEST(Euler, ZeroAtPriorWithExactPriorData) {
  const auto model = make_composition_model(diagonal_operator(5, 1.0), 0.1);
  const Element xp = 0.3 * harmonic_element(5);
  EXPECT_EQ(euler_residual(*model, xp, 0.5, model->apply(xp), xp), 0.0);
}

TEST(Euler, MatchesHalfFiniteDifferenceGradient) {
  const auto model = make_composition_model(diagonal_operator(6, 1.0), 0.2, 2.0);
  const Element xp = 0.4 * harmonic_element(6);
  auto rng = seeded_rng(12, 0);
  const Element y = model->apply(harmonic_element(6)) + 1e-2 * random_unit(6, rng);
  const double alpha = 0.3;
  for (std::uint64_t k = 1; k <= 5; ++k) {
    auto r2 = seeded_rng(12, k);
    const Element x = harmonic_element(6) + 0.5 * random_unit(6, r2);
    // Oracle: central differences of the functional itself.
    Element grad(6);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < 6; ++i) {
      Element e = Element::Zero(6);
      e(i) = h;
      grad(i) = (tikhonov_functional(*model, x + e, alpha, y, xp) -
                 tikhonov_functional(*model, x - e, alpha, y, xp)) /
                (2 * h);
    }
    const double fd = grad.norm() / 2.0;
    EXPECT_NEAR(euler_residual(*model, x, alpha, y, xp), fd, 1e-4 * fd);
  }
}

TEST(Continuation, SinglePointMatchesDirectSolve) {
  const auto model = make_composition_model(diagonal_operator(15, 1.0), 0.1, 2.0);
  const Element xt = harmonic_element(15);
  const Element xp = 0.6 * xt;
  auto rng = seeded_rng(1, 1);
  const Element y = model->apply(xt) + 1e-3 * random_unit(15, rng);
  const auto path = continuation_solve(*model, {1e-2}, y, xp);
  ASSERT_EQ(path.size(), 1u);
  const TikhonovResult direct = solve_nonlinear(*model, 1e-2, y, xp, xp);
  EXPECT_EQ(path[0].x, direct.x);
}

TEST(Continuation, LinearPathMatchesClosedFormAndResidualMonotone) {
  const auto model = make_diagonal_linear(40, 2.0);
  const SpectralDecomposition d = decompose(model->base_operator());
  const Element xt = harmonic_element(40);
  const Element xp = 0.3 * xt;
  auto rng = seeded_rng(3, 3);
  const Element noise = 1e-3 * random_unit(40, rng);
  std::vector<double> grid;
  for (int j = 0; j <= 12; ++j) grid.push_back(std::pow(10.0, -j * 0.5));
  const auto path = continuation_solve(*model, grid, model->apply(xt) + noise, xp);
  for (std::size_t i = 0; i < path.size(); ++i) {
    ASSERT_TRUE(path[i].ok());
    EXPECT_LE((path[i].x - solve_linearized(d, grid[i], xt, xp, noise)).norm(), 1e-8);
    if (i > 0) EXPECT_LE(path[i].data_residual, path[i - 1].data_residual);
  }
}

TEST(Continuation, NonlinearResidualMonotoneWithinSlack) {
  const auto model = make_composition_model(diagonal_operator(40, 2.0), 0.1, 3.0);
  const Element xt = harmonic_element(40);
  const ProblemInstance inst = synthesize_instance(model, xt, SourcePrior{0.5, 2.0 * xt, 0}, true);
  auto rng = seeded_rng(3, 4);
  const NoisyObservation obs = add_noise(inst, 1e-3, random_unit(40, rng));
  std::vector<double> grid;
  for (int j = 0; j <= 12; ++j) grid.push_back(std::pow(10.0, -j * 0.5));
  SolverOptions opts;
  opts.domain = Ball{xt, inst.rho()};
  const auto path = continuation_solve(*model, grid, obs.y_noisy, inst.x_prior, opts);
  for (std::size_t i = 1; i < path.size(); ++i) {
    ASSERT_TRUE(path[i].converged);
    EXPECT_LE(path[i].data_residual, path[i - 1].data_residual + 1e-10);
  }
}

TEST(Continuation, LinearizedResidualNondecreasingInAlpha) {
  const auto model = make_diagonal_linear(30, 1.0);
  const SpectralDecomposition d = decompose(model->base_operator());
  const Element xt = harmonic_element(30);
  auto rng = seeded_rng(9, 9);
  const Element noise = 1e-2 * random_unit(30, rng);
  const Element y = model->apply(xt) + noise;
  double prev = -1.0;
  for (int j = -12; j <= 4; ++j) {
    const double alpha = std::pow(10.0, j * 0.5);
    const Element x = solve_linearized(d, alpha, xt, Element::Zero(30), noise);
    const double r = (model->apply(x) - y).norm();
    EXPECT_GE(r, prev);
    prev = r;
  }
}

TEST(Continuation, RejectsBadGrids) {
  const auto model = make_diagonal_linear(4, 1.0);
  const Element y = Element::Ones(4);
  const Element xp = Element::Zero(4);
  EXPECT_THROW(continuation_solve(*model, {1e-2, 1e-1}, y, xp), Error);
  EXPECT_THROW(continuation_solve(*model, {1e-1, 1e-1}, y, xp), Error);
  EXPECT_THROW(continuation_solve(*model, {1.0, 0.0}, y, xp), Error);
  EXPECT_THROW(continuation_solve(*model, {}, y, xp), Error);
}
