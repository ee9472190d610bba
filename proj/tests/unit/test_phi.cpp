#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "molab/phi.hpp"

using namespace molab;

namespace {

const Box kUnit{2, {0, 0, 0}, {1, 1, 0}};

double phi_direct(double p, double q, double r, double a, double t) {
  return std::pow(t, p) + a * std::pow(t, q) * std::pow(std::log(std::exp(1.0) + t), r);
}

ExponentField field(const char* p, const char* q, const char* r, const char* a) {
  return ExponentField(2, ScalarField::expression(p, 2), ScalarField::expression(q, 2), ScalarField::expression(r, 2),
                       ScalarField::expression(a, 2));
}

}  // namespace

TEST(LocalPhi, MatchesDirectFormula) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    const double p = 1 + 2 * u(rng), q = p + u(rng), r = 2 * u(rng) - 1, a = 3 * u(rng);
    const double t = std::exp(8 * u(rng) - 4);
    const LocalPhi f = LocalPhi::from({p, q, r, a});
    const double want = phi_direct(p, q, r, a, t);
    EXPECT_NEAR(f.value(t), want, 1e-13 * want);
    EXPECT_NEAR(f.log_value(std::log(t)), std::log(want), 1e-12);
  }
}

TEST(LocalPhi, LogValueBeyondDoubleRange) {
  const LocalPhi f = LocalPhi::from({2.0, 3.0, 1.0, 1.0});
  // t = e^400: t^3 log(e + t) dominates, log = 1200 + log(400 + log1p(e^{1-400}))
  EXPECT_NEAR(f.log_value(400.0), 1200.0 + std::log(400.0), 1e-9);
  EXPECT_NEAR(f.log_value(-400.0), -800.0, 1e-9);
}

TEST(LocalPhi, InverseRoundTrip) {
  const LocalPhi f = LocalPhi::from({1.5, 2.5, 0.7, 2.0});
  for (double s : {1e-12, 1e-3, 0.5, 1.0, 7.0, 1e6, 1e40}) {
    const double t = f.inverse(s).t;
    EXPECT_NEAR(f.log_value(std::log(t)), std::log(s), 1e-10) << s;
  }
}

TEST(LocalPhi, ConjugateOfSquare) {
  // (t^2)* (s) = s^2 / 4 at t = s / 2
  const LocalPhi f = LocalPhi::from({2.0, 2.0, 0.0, 0.0});
  for (double s : {0.1, 1.0, 3.0}) {
    const ConjugateValue c = f.conjugate(s);
    EXPECT_NEAR(c.value, s * s / 4, 1e-9);
    EXPECT_NEAR(c.argmax, s / 2, 1e-5);
  }
}

TEST(LocalPsi, SobolevConjugatePower) {
  // a = 0: Psi = t^{np/(n-p)}; n = 2, p = 1.5 gives 6
  const LocalPsi g = LocalPsi::from({1.5, 1.5, 0.0, 0.0}, 2);
  EXPECT_DOUBLE_EQ(g.p_star, 6.0);
  EXPECT_NEAR(g.value(1.3), std::pow(1.3, 6.0), 1e-12);
}

TEST(LocalPsi, DoublePhaseTerm) {
  // Psi = t^{p*} + A t^{q*} log(e + t/b)^{s}, A = a^{q*/q}, b = a^{(q-1)/q}, s = r q*/q
  const double p = 1.2, q = 1.5, r = 0.4, a = 2.0;
  const LocalPsi g = LocalPsi::from({p, q, r, a}, 2);
  const double ps = 2 * p / (2 - p), qs = 2 * q / (2 - q);
  const double A = std::pow(a, qs / q), b = std::pow(a, (q - 1) / q), s = r * qs / q;
  for (double t : {0.01, 0.7, 4.0}) {
    const double want = std::pow(t, ps) + A * std::pow(t, qs) * std::pow(std::log(std::exp(1.0) + t / b), s);
    EXPECT_NEAR(g.value(t), want, 1e-12 * want);
    EXPECT_NEAR(g.inverse(want).t, t, 1e-9 * t);
  }
}

TEST(PhiFunction, EqualModeReplacesQ) {
  const PhiFunction phi(field("1.5", "3", "0", "1"), PhiMode::equal);
  EXPECT_DOUBLE_EQ(phi.coefficients({0.5, 0.5, 0}).q, 1.5);
  EXPECT_NEAR(phi_eval(phi, {0.5, 0.5, 0}, 2.0), 2 * std::pow(2.0, 1.5), 1e-12);
}

TEST(PhiFunction, TargetPsiNeedsSubcriticalExponents) {
  const SampleSet s = SampleSet::lattice(kUnit, 5);
  EXPECT_THROW(make_target_psi(PhiFunction(field("2", "2", "0", "0")), s), InvalidArgument);
  EXPECT_THROW(make_target_psi(PhiFunction(field("1.5", "2.1", "0", "1")), s), InvalidArgument);
  EXPECT_NO_THROW(make_target_psi(PhiFunction(field("1.5", "1.9", "0", "1")), s));
}

TEST(PhiFunction, IncDec) {
  const SampleSet s = SampleSet::lattice(kUnit, 9);
  const PhiFunction phi(field("1.4 + 0.2*x1", "1.8 + 0.3*x2", "0.5*x1", "1 + x2"));
  const auto [alpha, beta] = inc_dec_exponents(phi, s);
  EXPECT_DOUBLE_EQ(alpha, 1.4);
  EXPECT_DOUBLE_EQ(beta, 2.1 + 0.5);
  EXPECT_TRUE(check_inc_dec(phi, s, alpha, beta, 5000).passed);
  // Phi / t^{alpha} stops increasing once alpha exceeds p-
  const PhiFunction pure(field("1.5", "1.5", "0", "0"));
  EXPECT_FALSE(check_inc_dec(pure, s, 1.6, 1.5, 2000).passed);
  EXPECT_FALSE(check_inc_dec(pure, s, 1.5, 1.4, 2000).passed);
}

TEST(PhiFunction, InverseRelation) {
  const SampleSet s = SampleSet::lattice(kUnit, 5);
  const PhiFunction phi(field("1.5", "1.5", "0", "0"));
  const PsiFunction psi = make_target_psi(phi, s);
  // t^{-1/n} t^{1/p} = t^{1/p*}: the ratio is exactly 1
  EXPECT_TRUE(check_inverse_relation(phi, psi, s, 1e-3, 1e3, 1.0 + 1e-9).passed);
}
