#include <gtest/gtest.h>

#include <cmath>

#include "molab/conditions.hpp"

using namespace molab;

namespace {

const Box kUnit{2, {0, 0, 0}, {1, 1, 0}};

ExponentField field(const char* p, const char* q, const char* r, const char* a) {
  return ExponentField(2, ScalarField::expression(p, 2), ScalarField::expression(q, 2), ScalarField::expression(r, 2),
                       ScalarField::expression(a, 2));
}

PhiFunction smooth_phi() { return PhiFunction(field("1.6 + 0.2*x1", "1.8 + 0.2*x1", "0.5 + 0.3*x2", "abs(x1 - 0.5)")); }

}  // namespace

TEST(A0, BetaFormula) {
  // 1/beta = 2 (1 + |a|) log(e + 1/2)^{r+}
  EXPECT_NEAR(1.0 / a0_beta(1.0, 1.0), 4.0 * 1.1688476234983056, 1e-12);
  EXPECT_NEAR(1.0 / a0_beta(0.0, 0.0), 2.0, 1e-15);
  EXPECT_THROW(a0_beta(1.0, -0.5), InvalidArgument);
}

TEST(A0, PassesOnSmoothField) {
  const ConditionReport r = verify_A0(smooth_phi(), SampleSet::lattice(kUnit, 21));
  EXPECT_TRUE(r.passed());
  EXPECT_NEAR(1.0 / r.beta, 2.0 * 1.5 * std::pow(std::log(std::exp(1.0) + 0.5), 0.8), 1e-10);
  EXPECT_THROW(verify_A0(PhiFunction(field("2", "2", "-1", "1")), SampleSet::lattice(kUnit, 5)), InvalidArgument);
}

TEST(ClaimConstants, EmpiricalWithinBounds) {
  ClaimHypotheses h;
  h.p_holder = 0.2;
  h.q_holder = 0.2;
  const ClaimConstants c = compute_claim_constants(smooth_phi(), SampleSet::lattice(kUnit, 21), {}, h);
  EXPECT_TRUE(c.within_bounds());
  EXPECT_GE(c.M_empirical, 1.0);
  EXPECT_GE(c.N_empirical, 1.0);
  // K = 1 + |a| log(e + 1)^{r+}
  EXPECT_NEAR(c.K, 1.0 + 0.5 * std::pow(std::log(std::exp(1.0) + 1.0), 0.8), 1e-12);
}

TEST(ClaimConstants, HMaxClosedForm) {
  // c = 0: the exponent vanishes and h = 1
  EXPECT_NEAR(claim_h_max(2, 0.0, 1.0, 1.5), 1.0, 1e-15);
  // independent grid over R in (0, omega^{-1/n}]
  const int n = 2;
  const double c = 0.3, alpha = 1.0, pm = 1.5, omega = M_PI;
  double best = 0.0;
  for (int i = 1; i <= 200000; ++i) {
    const double R = std::pow(omega, -0.5) * i / 200000.0;
    best = std::max(best, std::pow(omega * R * R, -c * std::pow(2.0, alpha) * std::pow(R, alpha) / pm));
  }
  EXPECT_NEAR(claim_h_max(n, c, alpha, pm), best, 1e-8 * best);
}

TEST(A1Prime, HolderBetaPassesAndBetaOneFails) {
  const PhiFunction phi = smooth_phi();
  const SampleSet s = SampleSet::lattice(kUnit, 21);
  ClaimHypotheses h;
  h.p_holder = 0.2;
  h.q_holder = 0.2;
  BallSampling b;
  b.balls = 300;
  const ClaimConstants c = compute_claim_constants(phi, s, b, h);
  const HolderBeta hb = a1_holder_beta(phi, s, c, 1.0, 1.0);
  EXPECT_GT(hb.beta, 0.0);
  EXPECT_LT(hb.beta, 1.0);
  EXPECT_TRUE(verify_A1_prime(phi, s, hb.beta, b).passed());
  EXPECT_FALSE(verify_A1_prime(phi, s, 1.0, b).passed());
}

TEST(A1Prime, HolderBetaNeedsRatioGap) {
  // (q/p)+ = 3 / 1.5 = 2 >= 1 + 1/2
  const PhiFunction phi(field("1.5", "3", "0", "1"));
  const SampleSet s = SampleSet::lattice(kUnit, 5);
  ClaimConstants c;
  EXPECT_THROW(a1_holder_beta(phi, s, c, 1.0, 1.0), InvalidArgument);
}

TEST(A1Equivalent, ConstantCoefficientPassesStepFails) {
  SampleSet s = SampleSet::lattice(kUnit, 11);
  s.refine_near({0.5, 0.5, 0}, 30, 8, 0.1);
  const PhiFunction good(field("1.5", "1.8 + 0.3*x1", "0", "2"));
  const double C = a1_equivalent_constant(0.0, 1.8, 2.1, 2.0, 0.3 * std::sqrt(2.0) * 2.0);
  EXPECT_TRUE(verify_A1_equivalent(good, s, 1.0 / std::max(1.0, C)).passed());
  ExponentField st(2, ScalarField::constant(1.5), ScalarField::constant(2), ScalarField::constant(0),
                   ScalarField::step(0, 0.5, 0, 1));
  const ConditionReport bad = verify_A1_equivalent(PhiFunction(st), s, 0.1);
  EXPECT_FALSE(bad.passed());
  EXPECT_TRUE(bad.report.witness.contains("x"));
  EXPECT_TRUE(bad.report.witness.contains("y"));
}

TEST(A1Equivalent, ConstantFormula) {
  // c_a^{1/q-} + max(q+/e, |a| log |a|) C_q
  EXPECT_NEAR(a1_equivalent_constant(4.0, 2.0, 3.0, 5.0, 0.5), 2.0 + 5.0 * std::log(5.0) * 0.5, 1e-12);
  EXPECT_NEAR(a1_equivalent_constant(0.0, 2.0, 3.0, 1.0, 0.5), 3.0 / std::exp(1.0) * 0.5, 1e-12);
}

TEST(A2Prime, BoundedAndNekvinda) {
  EXPECT_TRUE(verify_A2_prime(smooth_phi(), SampleSet::lattice(kUnit, 11)).passed());
  ExponentField g(2, ScalarField::expression("2 + 1/(1 + x1^2 + x2^2)", 2), ScalarField::constant(3),
                  ScalarField::constant(1), ScalarField::constant(1));
  A2Options o;
  o.mode = A2Mode::nekvinda;
  o.p_infty = 2.0;
  o.c = 0.5;
  const ConditionReport r = verify_A2_prime(PhiFunction(g), SampleSet::lattice(Box{2, {-4, -4, 0}, {4, 4, 0}}, 21), o);
  EXPECT_TRUE(r.passed());
  EXPECT_TRUE(r.auxiliary.contains("phi_infinity_exponent"));
}
