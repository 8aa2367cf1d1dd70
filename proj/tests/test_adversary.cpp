#include "satlab/adversary.hpp"
#include "satlab/error.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace satlab;

namespace {

Element vec2(double a, double b) {
  Element v(2);
  v << a, b;
  return v;
}

std::shared_ptr<const LinearModel> diag_model() {
  DenseOperator a = DenseOperator::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 0.5;
  return std::make_shared<const LinearModel>(a, 10.0);
}

ProblemInstance diag_instance() { return make_instance(diag_model(), vec2(1, 1), vec2(0, 0)); }

ProblemInstance source_instance(int n, double norm) {
  auto model = make_diagonal_linear(n, 2.0, 1.0, 10.0);
  return synthesize_instance(model, harmonic_element(n),
                             SourcePrior{0.5, norm * harmonic_element(n), norm});
}

}  // namespace

TEST(Direction, DiagonalHandEvaluation) {
  const ProblemInstance inst = diag_instance();
  const SpectralDecomposition& d = *inst.linearization;
  const SpectralProjector g = band_projector(d, 0.25);
  ASSERT_EQ(g.selected_indices().size(), 1u);
  const Element misfit = d.apply(inst.x_true - inst.x_prior);
  EXPECT_NEAR(misfit(0), 1.0, 1e-15);
  EXPECT_NEAR(misfit(1), 0.5, 1e-15);
  const Element z = adversarial_direction(d, g, misfit);
  // ||G misfit|| = 1/2, so z = 2 * misfit.
  EXPECT_NEAR(z(0), 2.0, 1e-14);
  EXPECT_NEAR(z(1), 1.0, 1e-14);
  EXPECT_NEAR(g.apply(z).norm(), 1.0, 1e-12);
}

TEST(Direction, UnitMisfitInBandIsReturned) {
  const ProblemInstance inst = diag_instance();
  const SpectralDecomposition& d = *inst.linearization;
  const SpectralProjector g = band_projector(d, 0.25);
  const Element z = adversarial_direction(d, g, vec2(0, 1));
  EXPECT_NEAR((z - vec2(0, 1)).norm(), 0.0, 1e-15);
}

TEST(Direction, ZeroMisfitFallsBackToBandVector) {
  const ProblemInstance inst = diag_instance();
  const SpectralDecomposition& d = *inst.linearization;
  const SpectralProjector g = band_projector(d, 1.0);
  const Element z = adversarial_direction(d, g, Element::Zero(2));
  EXPECT_NEAR(g.apply(z).norm(), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(z(0)), 1.0, 1e-15);
}

TEST(Direction, EmptyProjectorRejected) {
  const ProblemInstance inst = diag_instance();
  try {
    adversarial_direction(*inst.linearization, SpectralProjector{}, vec2(1, 0));
    FAIL() << "expected invalid_input";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
  }
}

TEST(Datum, DiagonalExample) {
  const ProblemInstance inst = diag_instance();
  const AdversarialDatum a = make_adversarial_datum(inst, 0.25);
  EXPECT_EQ(a.delta_k, 0.25);
  EXPECT_EQ(a.index, 1u);
  const Element pert = a.observation.y_noisy - inst.y_exact;
  EXPECT_NEAR(pert(0), 0.0, 1e-15);
  EXPECT_NEAR(pert(1), -0.25, 1e-15);
}

TEST(Datum, NoiseNormEqualsDeltaK) {
  const ProblemInstance inst = source_instance(30, 0.5);
  const auto& lam = inst.linearization->eigenvalues();
  for (Eigen::Index k = 0; k < 8; ++k) {
    const AdversarialDatum a = make_adversarial_datum(inst, lam(k));
    EXPECT_NEAR((a.observation.y_noisy - inst.y_exact).norm(), lam(k), 1e-12 * lam(k));
    EXPECT_NEAR(a.projector.apply(a.z_k).norm(), 1.0, 1e-12);
    EXPECT_GE(a.z_k.norm(), 1.0 - 1e-12);
  }
}

TEST(Datum, TruePriorUsesLargestEigenvalue) {
  auto model = make_diagonal_linear(10, 2.0, 1.0, 10.0);
  const Element xt = harmonic_element(10);
  const ProblemInstance inst = make_instance(model, xt, xt);
  const double lam1 = inst.linearization->eigenvalues()(0);
  const AdversarialDatum a = make_adversarial_datum(inst, lam1);
  EXPECT_NEAR((a.observation.y_noisy - inst.y_exact).norm(), lam1, 1e-12 * lam1);
}

TEST(Datum, DisjointBandsGiveOrthogonalPerturbations) {
  const ProblemInstance inst = source_instance(20, 0.5);
  const auto& lam = inst.linearization->eigenvalues();
  const AdversarialDatum a = make_adversarial_datum(inst, lam(1));
  const AdversarialDatum b = make_adversarial_datum(inst, lam(3));
  const Element pa = a.observation.y_noisy - inst.y_exact;
  const Element pb = b.observation.y_noisy - inst.y_exact;
  EXPECT_LE(std::abs(pa.dot(pb)), 1e-12);
}

TEST(Datum, NonEigenvalueRejected) {
  const ProblemInstance inst = diag_instance();
  EXPECT_THROW(make_adversarial_datum(inst, 0.3), Error);
}

TEST(Mdps2, Arithmetic) {
  EXPECT_NEAR(mdps2_lower_bound(0.01, 0.01, 0.1), 3.781e-5, 1e-8);
  EXPECT_NEAR(mdps2_lower_bound(0.01, 0.01, 0.1), 1e-4 * 0.005 / (0.115 * 0.115), 1e-20);
}

TEST(Mdps2, RewrittenFormWithDeltaEqualLambda) {
  for (double lam : {1.0, 0.25, 1e-2, 1e-5}) {
    for (double alpha : {10.0, 1.0, 1e-3, 1e-7}) {
      const double rewritten = (lam * lam / lam) / (2.0 * std::pow(alpha / lam + 1.5, 2));
      const double b = mdps2_lower_bound(lam, lam, alpha);
      EXPECT_NEAR(b, rewritten, 1e-14 * std::max(1.0, rewritten));
    }
  }
}

TEST(Mdps2, VanishesForLargeAlpha) {
  EXPECT_LT(mdps2_lower_bound(0.1, 0.1, 1e8), 1e-18);
  EXPECT_GT(mdps2_lower_bound(0.1, 0.1, 1.0), mdps2_lower_bound(0.1, 0.1, 10.0));
}

TEST(Inequalities, DiagonalExampleAllHold) {
  const ProblemInstance inst = diag_instance();
  const AdversarialDatum a = make_adversarial_datum(inst, 0.25);
  for (double alpha : {1.0, 0.1, 0.01}) {
    const AdversarialCheck c = verify_adversarial_inequalities(inst, a, alpha);
    EXPECT_TRUE(c.passed()) << alpha;
    EXPECT_GE(c.cross_term, 0.0);
    EXPECT_GE(c.error_sq, c.perturbation_sq);
    EXPECT_GE(c.perturbation_sq, c.lower_bound);
    EXPECT_LE(c.pythagoras_residual, 1e-12);
  }
}

TEST(Inequalities, CrossTermMatchesSpectralForm) {
  const ProblemInstance inst = source_instance(40, 0.5);
  const auto& lam = inst.linearization->eigenvalues();
  for (Eigen::Index k : {1, 2, 4}) {
    const AdversarialDatum a = make_adversarial_datum(inst, lam(k));
    for (double alpha : {1.0, 1e-2, 1e-4}) {
      const AdversarialCheck c = verify_adversarial_inequalities(inst, a, alpha);
      EXPECT_TRUE(c.passed());
      EXPECT_NEAR(c.cross_term, c.spectral_cross_term,
                  1e-10 * std::max(std::abs(c.spectral_cross_term), 1e-300));
      // Direct recomputation of the Pythagoras identity.
      const double lhs = c.error_sq;
      const double rhs = c.bias_sq + c.perturbation_sq + c.cross_term;
      EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, lhs));
    }
  }
}

TEST(Inequalities, TruePriorHasNoBias) {
  auto model = make_diagonal_linear(10, 2.0, 1.0, 10.0);
  const Element xt = harmonic_element(10);
  const ProblemInstance inst = make_instance(model, xt, xt);
  const AdversarialDatum a = make_adversarial_datum(inst, inst.linearization->eigenvalues()(2));
  const AdversarialCheck c = verify_adversarial_inequalities(inst, a, 0.1);
  EXPECT_EQ(c.bias_sq, 0.0);
  EXPECT_EQ(c.cross_term, 0.0);
  EXPECT_TRUE(c.passed());
  EXPECT_GE(c.error_sq, c.lower_bound);
}

TEST(Inequalities, Mdps2BoundHoldsAcrossGrid) {
  const ProblemInstance inst = source_instance(60, 1.0);
  const auto& lam = inst.linearization->eigenvalues();
  for (Eigen::Index k = 1; k < 10; ++k) {
    const AdversarialDatum a = make_adversarial_datum(inst, lam(k));
    for (double alpha : {1.0, 1e-1, 1e-2, 1e-3, 1e-5}) {
      const AdversarialCheck c = verify_adversarial_inequalities(inst, a, alpha);
      EXPECT_GE(c.perturbation_sq, mdps2_lower_bound(lam(k), lam(k), alpha) * (1 - 1e-10));
    }
  }
}

TEST(SupError, OnlyAdversarialGivesOneRow) {
  const ProblemInstance inst = source_instance(30, 0.5);
  const SupErrorResult r = sup_error(inst, Selector{}, 1e-3, 0, 0, true);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].kind, "adversarial");
  EXPECT_EQ(r.worst_error, r.rows[0].error);
}

TEST(SupError, ExactDataWithTruePrior) {
  auto model = make_diagonal_linear(20, 2.0, 1.0, 10.0);
  const Element xt = harmonic_element(20);
  const ProblemInstance inst = make_instance(model, xt, xt);
  const SupErrorResult r = sup_error(inst, Selector{}, 0.0, 5, 0, true);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].kind, "exact");
  EXPECT_LE(r.worst_error, 1e-8);
}

TEST(SupError, MonotoneInCandidateSet) {
  const ProblemInstance inst = source_instance(30, 0.5);
  const double small = sup_error(inst, Selector{}, 1e-3, 3, 11, false).worst_error;
  const double large = sup_error(inst, Selector{}, 1e-3, 8, 11, false).worst_error;
  const double with_adv = sup_error(inst, Selector{}, 1e-3, 8, 11, true).worst_error;
  EXPECT_GE(large, small);
  EXPECT_GE(with_adv, large);
}

TEST(SupError, DeterministicAcrossJobs) {
  const ProblemInstance inst = source_instance(30, 0.5);
  const SupErrorResult a = sup_error(inst, Selector{}, 1e-3, 6, 3, true, 1);
  const SupErrorResult b = sup_error(inst, Selector{}, 1e-3, 6, 3, true, 4);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].error, b.rows[i].error);
    EXPECT_EQ(a.rows[i].alpha, b.rows[i].alpha);
  }
}

TEST(SupError, AdversarialAtLeastRandomMean) {
  const ProblemInstance inst = source_instance(100, 1.0);
  for (double delta : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const SupErrorResult r = sup_error(inst, Selector{}, delta, 8, 0, true);
    double mean = 0.0;
    int count = 0;
    for (const auto& row : r.rows) {
      if (row.kind == "random" && row.failure.empty()) {
        mean += row.error;
        ++count;
      }
    }
    ASSERT_GT(count, 0);
    mean /= count;
    EXPECT_GE(r.rows[0].error, mean) << "delta " << delta;
  }
}

TEST(SupError, NegativeDeltaRejected) {
  const ProblemInstance inst = diag_instance();
  EXPECT_THROW(sup_error(inst, Selector{}, -1.0, 1, 0, true), Error);
}
