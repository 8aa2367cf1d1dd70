#include "satlab/error.hpp"
#include "satlab/saturation_lab.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace satlab;

namespace {

ProblemInstance linear_source_instance(int n, double nu, double norm) {
  auto model = make_diagonal_linear(n, 2.0, 1.0, 10.0);
  const Element w = norm * harmonic_element(n);
  return synthesize_instance(model, harmonic_element(n), SourcePrior{nu, w, norm});
}

// Composition model with L ||u|| = 0.5: beta = 0.1, ||A|| = 1, ||u|| = 5.
ProblemInstance composition_instance(int n) {
  auto model = make_composition_model(diagonal_operator(n, 2.0), 0.1, 5.0);
  return synthesize_instance(model, harmonic_element(n),
                             SourcePrior{0.5, 5.0 * harmonic_element(n), 5.0}, true);
}

NoisyObservation seeded_noise(const ProblemInstance& inst, double delta, std::uint64_t seed) {
  auto rng = seeded_rng(seed, 0);
  return add_noise(inst, delta, random_unit(inst.y_exact.size(), rng));
}

}  // namespace

TEST(FitSlope, TwoPointLine) {
  const SlopeFit f = fit_slope({{1.0, 1.0}, {4.0, 2.0}});
  EXPECT_NEAR(f.slope, 0.5, 1e-15);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-15);
}

TEST(FitSlope, FlatLine) {
  const SlopeFit f = fit_slope({{1.0, 3.0}, {10.0, 3.0}});
  EXPECT_NEAR(f.slope, 0.0, 1e-15);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-15);
}

TEST(FitSlope, ExactPowerLaws) {
  std::vector<std::pair<double, double>> half, one;
  for (double d : geometric_grid(1e-2, 1e-5, 8)) {
    half.emplace_back(d, 2.0 * std::sqrt(d));
    one.emplace_back(d, 0.3 * d);
  }
  EXPECT_NEAR(fit_slope(half).slope, 0.5, 1e-12);
  EXPECT_NEAR(fit_slope(half).r_squared, 1.0, 1e-12);
  EXPECT_NEAR(fit_slope(one).slope, 1.0, 1e-12);
}

TEST(FitSlope, NoisyPowerLawWithinTolerance) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0.0, 0.01);
  for (double truth : {0.25, 0.5, 2.0 / 3.0, 1.0}) {
    std::vector<std::pair<double, double>> pts;
    for (double d : geometric_grid(1e-1, 1e-6, 12)) {
      pts.emplace_back(d, 1.7 * std::pow(d, truth) * (1.0 + g(rng)));
    }
    const SlopeFit f = fit_slope(pts);
    EXPECT_NEAR(f.slope, truth, 0.02);
    EXPECT_GE(f.r_squared, 0.0);
    EXPECT_LE(f.r_squared, 1.0);
  }
}

TEST(FitSlope, DegenerateInputsRejected) {
  EXPECT_THROW(fit_slope({{1.0, 1.0}}), Error);
  EXPECT_THROW(fit_slope({{2.0, 1.0}, {2.0, 3.0}}), Error);
  EXPECT_THROW(fit_slope({{-1.0, 1.0}, {2.0, 3.0}}), Error);
  EXPECT_THROW(fit_slope({{1.0, 0.0}, {2.0, 3.0}}), Error);
}

TEST(GeometricGrid, EndpointsAndRatio) {
  const std::vector<double> g = geometric_grid(1e-2, 1e-5, 4);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_DOUBLE_EQ(g.front(), 1e-2);
  EXPECT_NEAR(g.back(), 1e-5, 1e-20);
  EXPECT_NEAR(g[1] / g[0], 0.1, 1e-12);
  EXPECT_THROW(geometric_grid(1e-2, 1e-5, 1), Error);
}

TEST(RateExperiment, LinearHalfSourceSlopeNearHalf) {
  const ProblemInstance inst = linear_source_instance(100, 0.5, 1.0);
  const RateReport r =
      rate_experiment(inst, Selector{}, geometric_grid(1e-2, 1e-5, 6), RateOptions{4, 0, true, 1});
  ASSERT_EQ(r.samples.size(), 6u);
  for (std::size_t i = 1; i < r.samples.size(); ++i) {
    EXPECT_LT(r.samples[i].delta, r.samples[i - 1].delta);
  }
  EXPECT_GE(r.fit.slope, 0.4);
  EXPECT_LE(r.fit.slope, 0.6);
  EXPECT_GE(r.fit.r_squared, 0.0);
  EXPECT_LE(r.fit.r_squared, 1.0);
  EXPECT_TRUE(r.failures.empty());
}

TEST(RateExperiment, GridValidation) {
  const ProblemInstance inst = linear_source_instance(20, 0.5, 1.0);
  EXPECT_THROW(rate_experiment(inst, Selector{}, {1e-2, 1e-3, 1e-4}), Error);
  EXPECT_THROW(rate_experiment(inst, Selector{}, {1e-2, 1e-3, 1e-3, 1e-4}), Error);
}

TEST(RateExperiment, TooFewConvergedSamplesIsInsufficientData) {
  const ProblemInstance inst = linear_source_instance(20, 0.5, 1.0);
  Selector sel;
  sel.cfg.tau = 1e4;  // every delta has no discrepancy solution
  try {
    rate_experiment(inst, sel, {1e-2, 1e-3, 1e-4, 1e-5}, RateOptions{1, 0, true, 1});
    FAIL() << "expected insufficient_data";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_data);
  }
}

TEST(SaturationProbe, RefusesTruePrior) {
  auto model = make_diagonal_linear(20, 2.0, 1.0, 10.0);
  const Element xt = harmonic_element(20);
  const ProblemInstance inst = make_instance(model, xt, xt);
  EXPECT_THROW(saturation_probe(inst, Selector{}, 2, 5), Error);
}

TEST(SaturationProbe, LinearRowsPassChainAndCoupleDeltaToLambda) {
  const ProblemInstance inst = linear_source_instance(60, 0.5, 1.0);
  const SaturationReport rep = saturation_probe(inst, Selector{}, 2, 8);
  ASSERT_EQ(rep.rows.size(), 7u);
  for (const SaturationRow& row : rep.rows) {
    EXPECT_EQ(row.delta_k, row.lam_k);
    EXPECT_TRUE(row.checks_passed) << row.k << " " << row.note;
    EXPECT_NEAR(row.ratio_k, row.error_k / std::sqrt(row.delta_k), 1e-12 * row.ratio_k);
    // Linear model: the solution is the linearized one, so the mdps2 bound
    // applies to the full error.
    EXPECT_GE(row.error_k * row.error_k,
              mdps2_lower_bound(row.delta_k, row.lam_k, row.alpha_k) * (1 - 1e-10));
  }
  EXPECT_TRUE(rep.ratio_bounded_below(0.1));
}

TEST(Lemma, LinearModelBoundsHold) {
  const ProblemInstance inst = linear_source_instance(40, 0.5, 1.0);
  for (double delta : {1e-2, 1e-4}) {
    const NoisyObservation obs = seeded_noise(inst, delta, 5);
    const LemmaReport rep =
        lemma_f22_check(inst, geometric_grid(1.0, 1e-6, 7), obs);
    EXPECT_EQ(rep.lipschitz, 0.0);
    EXPECT_EQ(rep.violations(), 0);
    EXPECT_EQ(rep.converged_count(), 7);
    for (const LemmaRow& row : rep.rows) {
      // Closed-form bounds with L = 0.
      EXPECT_NEAR(row.error_bound, (delta + row.alpha) / std::sqrt(row.alpha),
                  1e-12 * row.error_bound);
      EXPECT_NEAR(row.residual_bound, delta + 2.0 * row.alpha, 1e-15);
    }
  }
}

TEST(Lemma, ExactDataTruePriorIsTrivial) {
  auto model = make_diagonal_linear(20, 2.0, 1.0, 10.0);
  const ProblemInstance inst = synthesize_instance(
      model, harmonic_element(20), SourcePrior{0.5, Element::Zero(20), 0.0});
  const NoisyObservation obs{inst.y_exact, 0.0};
  const LemmaReport rep = lemma_f22_check(inst, {1e-2, 1e-4, 1e-6}, obs);
  EXPECT_EQ(rep.violations(), 0);
  for (const LemmaRow& row : rep.rows) EXPECT_LE(row.error, 1e-10);
}

TEST(Lemma, CompositionHalfLipschitzBoundsHold) {
  const ProblemInstance inst = composition_instance(30);
  const NoisyObservation obs = seeded_noise(inst, 1e-3, 9);
  SolverOptions opts;
  opts.domain = Ball{inst.x_true, inst.rho()};
  const LemmaReport rep = lemma_f22_check(inst, geometric_grid(1.0, 1e-6, 7), obs, opts);
  EXPECT_NEAR(rep.lipschitz * rep.norm_u, 0.5, 1e-12);
  EXPECT_EQ(rep.converged_count(), 7);
  EXPECT_EQ(rep.violations(), 0);
}

TEST(Lemma, HypothesisViolationWhenLipschitzTimesNormTooLarge) {
  auto model = make_composition_model(diagonal_operator(20, 2.0), 0.1, 20.0);
  const ProblemInstance inst = synthesize_instance(
      model, harmonic_element(20), SourcePrior{0.5, 12.0 * harmonic_element(20), 12.0});
  const NoisyObservation obs = seeded_noise(inst, 1e-3, 1);
  try {
    lemma_f22_check(inst, {1e-2}, obs);
    FAIL() << "expected hypothesis_violation";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::hypothesis_violation);
  }
}

TEST(Linearization, IdentityGapSmallAtStationaryPoints) {
  const ProblemInstance inst = composition_instance(30);
  const NoisyObservation obs = seeded_noise(inst, 1e-3, 2);
  for (double alpha : {1.0, 1e-2, 1e-4}) {
    const TikhonovResult r =
        solve_nonlinear(*inst.model, alpha, obs.y_noisy, inst.x_prior, inst.x_prior);
    ASSERT_TRUE(r.converged);
    EXPECT_LE(linearization_identity_gap(inst, obs, r), 1e-8) << alpha;
  }
}

TEST(Linearization, ComparisonFactorHoldsOnComposition) {
  const ProblemInstance inst = composition_instance(30);
  const ConstantReport c = constant_report(inst, SelectorConfig{});
  const NoisyObservation obs = seeded_noise(inst, 1e-3, 3);
  const LemmaReport lemma = lemma_f22_check(inst, geometric_grid(1.0, 1e-6, 7), obs);
  const auto rows = compare_with_linearization(inst, obs, lemma, c.comparison_factor);
  ASSERT_FALSE(rows.empty());
  for (const ComparisonRow& row : rows) {
    EXPECT_TRUE(row.passed) << row.alpha;
    EXPECT_LE(row.linearized_error, row.factor * row.nonlinear_error);
  }
}

TEST(Linearization, LinearModelSolutionsCoincide) {
  const ProblemInstance inst = linear_source_instance(30, 0.5, 1.0);
  const NoisyObservation obs = seeded_noise(inst, 1e-3, 4);
  const LemmaReport lemma = lemma_f22_check(inst, {1e-1, 1e-3}, obs);
  for (const ComparisonRow& row : compare_with_linearization(inst, obs, lemma, 1.0)) {
    EXPECT_NEAR(row.linearized_error, row.nonlinear_error, 1e-9);
    EXPECT_TRUE(row.passed);
  }
}

TEST(Constants, LinearModelIsTrivial) {
  const ProblemInstance inst = linear_source_instance(20, 0.5, 1.0);
  const ConstantReport c = constant_report(inst, SelectorConfig{});
  EXPECT_EQ(c.kappa0, 0.0);
  EXPECT_EQ(c.lipschitz, 0.0);
  EXPECT_EQ(c.c0_range_invariance, 0.0);
  EXPECT_EQ(c.comparison_factor, 1.0);
  ASSERT_TRUE(c.norm_u.has_value());
  EXPECT_NEAR(*c.norm_u, 1.0, 1e-12);
}

TEST(Constants, CompositionAnalyticBounds) {
  auto model = make_composition_model(diagonal_operator(20, 2.0), 0.1, 1.0);
  const ProblemInstance inst = synthesize_instance(
      model, harmonic_element(20), SourcePrior{0.5, 0.5 * harmonic_element(20), 0.5});
  const ConstantReport c = constant_report(inst, SelectorConfig{});
  EXPECT_NEAR(c.kappa0, 0.1 / 0.9, 1e-12);
  EXPECT_LE(c.c1, 1.1 * 1.0 + 1e-12);
  EXPECT_NEAR(c.lipschitz, 0.1, 1e-12);
  EXPECT_LE(c.lipschitz_sampled, c.lipschitz + 1e-12);
  EXPECT_NEAR(c.lipschitz_times_norm_u, 0.05, 1e-12);
  EXPECT_NEAR(c.c0_range_invariance, (1.5 + c.prior_distance) * c.kappa0, 1e-12);
  EXPECT_GT(c.comparison_factor, 1.0);
}

TEST(Constants, NoSourceLeavesProductUndefined) {
  auto model = make_diagonal_linear(10, 2.0, 1.0, 10.0);
  const ProblemInstance inst =
      make_instance(model, harmonic_element(10), Element::Zero(10));
  const ConstantReport c = constant_report(inst, SelectorConfig{});
  EXPECT_FALSE(c.norm_u.has_value());
  EXPECT_TRUE(std::isnan(c.lipschitz_times_norm_u));
}
