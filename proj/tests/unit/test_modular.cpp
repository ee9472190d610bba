#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "molab/domain.hpp"
#include "molab/modular.hpp"

using namespace molab;

namespace {

ExponentField field(const char* p, const char* q = nullptr, const char* r = "0", const char* a = "0") {
  return ExponentField(2, ScalarField::expression(p, 2), ScalarField::expression(q ? q : p, 2),
                       ScalarField::expression(r, 2), ScalarField::expression(a, 2));
}

struct Fixture {
  DiscretizedDomain dom{make_square(), 64};
  const std::shared_ptr<const Quadrature>& q() const { return dom.cells(); }
  SampledFunction fn(const std::function<double(const Point&)>& f) const {
    SampledFunction u{q(), {}, {}};
    for (const Point& x : q()->nodes) u.values.push_back(f(x));
    return u;
  }
};

}  // namespace

TEST(Norm, ConstantOnUnitSquareWithSquareFunction) {
  Fixture fx;
  const FamilyPtr fam = phi_family(PhiFunction(field("2")), fx.q());
  for (double c : {0.5, 1.0, 3.0}) {
    const NormResult r = luxemburg_norm(fam, fx.fn([c](const Point&) { return c; }));
    EXPECT_NEAR(r.value, c, 1e-12);
  }
}

TEST(Norm, OneHasNormOneForEveryExponent) {
  // rho(1 / lambda) = int lambda^{-p(x)} = 1 exactly at lambda = 1 when |Omega| = 1
  Fixture fx;
  const FamilyPtr fam = phi_family(PhiFunction(field("1.2 + 1.5*x1*x2")), fx.q());
  EXPECT_NEAR(luxemburg_norm(fam, fx.fn([](const Point&) { return 1.0; })).value, 1.0, 1e-12);
}

TEST(Norm, ConstantExponentMatchesLpSum) {
  Fixture fx;
  const auto u = fx.fn([](const Point& x) { return 1.0 + std::sin(3 * x[0]) * x[1]; });
  for (double p : {1.0, 1.5, 3.0}) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) s += fx.q()->weights[i] * std::pow(u.values[i], p);
    const FamilyPtr fam = power_family(ScalarField::constant(p), fx.q());
    EXPECT_NEAR(luxemburg_norm(fam, u).value, std::pow(s, 1.0 / p), 1e-10) << p;
  }
}

TEST(Norm, ModularAtNormAndHomogeneity) {
  Fixture fx;
  const PhiFunction phi(field("1.3 + 0.5*x1", "2.2 + 0.4*x2", "x1 - 0.3", "abs(x1 - x2)"));
  const FamilyPtr fam = phi_family(phi, fx.q());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> un(-6, 6);
  for (int k = 0; k < 20; ++k) {
    const double scale = std::exp(un(rng));
    const auto u = fx.fn([&](const Point& x) { return scale * (1.1 + std::cos(7 * x[0] + k) * x[1]); });
    const NormResult r = luxemburg_norm(fam, u);
    SampledFunction v = u;
    for (double& z : v.values) z /= r.value;
    EXPECT_NEAR(modular(*fam, v), 1.0, 1e-8);
    SampledFunction w = u;
    for (double& z : w.values) z *= 4.5;
    EXPECT_NEAR(luxemburg_norm(fam, w).value / (4.5 * r.value), 1.0, 1e-9);
  }
}

TEST(Norm, ZeroFunction) {
  Fixture fx;
  const FamilyPtr fam = phi_family(PhiFunction(field("2")), fx.q());
  const NormResult r = luxemburg_norm(fam, fx.fn([](const Point&) { return 0.0; }));
  EXPECT_EQ(r.value, 0.0);
}

TEST(Norm, TinyAndHugeValuesStayInLogSpace) {
  Fixture fx;
  const FamilyPtr fam = phi_family(PhiFunction(field("2")), fx.q());
  const NormResult tiny = luxemburg_norm(fam, fx.fn([](const Point&) { return 1e-300; }));
  EXPECT_NEAR(tiny.log_value, std::log(1e-300), 1e-9);
  const NormResult huge = luxemburg_norm(fam, fx.fn([](const Point&) { return 1e300; }));
  EXPECT_NEAR(huge.log_value, std::log(1e300), 1e-9);
}

TEST(Norm, SobolevJointModular) {
  // u = 1, |grad u| = 1 with t^2: rho(u/l) + rho(g/l) = 2 / l^2 = 1 at l = sqrt 2
  Fixture fx;
  const FamilyPtr fam = phi_family(PhiFunction(field("2")), fx.q());
  SampledFunction u = fx.fn([](const Point&) { return 1.0; });
  u.grad_norm.assign(u.values.size(), 1.0);
  EXPECT_NEAR(sobolev_norm(fam, u).value, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(sobolev_modular(fam, u), 2.0, 1e-12);
}

TEST(Norm, ConjugateNormOfOne) {
  // (t^2)* = s^2/4, so |1|_{Phi*} = 1/2 on a unit-measure domain
  DiscretizedDomain dom(make_square(), 16);
  const FamilyPtr fam = conjugate_family(PhiFunction(field("2")), dom.cells());
  SampledFunction u{dom.cells(), std::vector<double>(dom.cells()->size(), 1.0), {}};
  EXPECT_NEAR(luxemburg_norm(fam, u).value, 0.5, 1e-7);
}

TEST(Sandwich, UnitBallAndSandwichHold) {
  Fixture fx;
  const PhiFunction phi(field("1.5 + 0.5*x1", "2 + x2", "0.3", "x1"));
  const FamilyPtr fam = phi_family(phi, fx.q());
  std::vector<SampledFunction> samples;
  for (int k = 0; k < 12; ++k) {
    auto u = fx.fn([&](const Point& x) { return 1.0 + k * x[0] * x[1]; });
    const double n = luxemburg_norm(fam, u).value;
    for (double& z : u.values) z *= (k % 3 == 0 ? 0.5 : k % 3 == 1 ? 1.0 : 2.0) / n;
    samples.push_back(u);
  }
  EXPECT_TRUE(check_unit_ball(phi, fam, samples).passed);
  EXPECT_TRUE(check_norm_modular_sandwich(phi, fam, samples).passed);
  const auto [lo, hi] = sandwich_exponents(phi, *fx.q());
  EXPECT_NEAR(lo, 1.5, 1e-2);
  EXPECT_NEAR(hi, 3.3, 1e-2);
}

TEST(Constants, CEpsilonAndCPower) {
  EXPECT_DOUBLE_EQ(c_power(3.0), 4.0);
  EXPECT_DOUBLE_EQ(c_power(0.5), 1.0);
  EXPECT_NEAR(c_epsilon(1.0), 1.0, 1e-12);
  // independent grid maximization
  for (double eps : {0.1, 0.3}) {
    double best = 1.0;
    for (double lt = -10; lt < 60; lt += 1e-4) {
      const double t = std::exp(lt);
      best = std::max(best, std::log(std::exp(1.0) + t) - std::pow(t, eps));
    }
    EXPECT_NEAR(c_epsilon(eps), best, 1e-6 * best) << eps;
  }
}
