#include <gtest/gtest.h>

#include <cmath>

#include "molab/quadrature.hpp"

using namespace molab;

TEST(Quadrature, GaussLegendreIsExactForPolynomials) {
  for (int n : {4, 8, 12, 16, 24, 32}) {
    const GaussRule& g = gauss_legendre(n);
    ASSERT_EQ(g.nodes.size(), static_cast<std::size_t>(n));
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.nodes[i], deg);
      const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
      EXPECT_NEAR(s, exact, 1e-13) << n << " " << deg;
    }
  }
  EXPECT_THROW(gauss_legendre(5), InvalidArgument);
}

TEST(Quadrature, KronrodWeightsSumToTwo) {
  const KronrodRule& k = gauss_kronrod15();
  double sk = 0.0, sg = 0.0;
  for (std::size_t i = 0; i < k.nodes.size(); ++i) {
    sk += k.kronrod_weights[i];
    sg += k.gauss_weights[i];
  }
  EXPECT_NEAR(sk, 2.0, 1e-14);
  EXPECT_NEAR(sg, 2.0, 1e-14);
}

TEST(Quadrature, IntegrateLogSmooth) {
  // int_0^1 x^2 = 1/3
  const LogIntegral r = integrate_log([](double x) { return 2.0 * std::log(x); }, 0.0, 1.0);
  EXPECT_NEAR(std::exp(r.log_value), 1.0 / 3.0, 1e-11);
}

TEST(Quadrature, IntegrateLogFarBelowDoubleRange) {
  // int_0^1 exp(-2000 - x) dx = e^-2000 (1 - e^-1)
  const LogIntegral r = integrate_log([](double x) { return -2000.0 - x; }, 0.0, 1.0);
  EXPECT_NEAR(r.log_value, -2000.0 + std::log1p(-std::exp(-1.0)), 1e-10);
}

TEST(Quadrature, IntegrateLogWithKink) {
  // int_{-1}^{1} |x| = 1, kink seeded as a breakpoint
  const LogIntegral r =
      integrate_log([](double x) { return std::log(std::fabs(x)); }, -1.0, 1.0, 1e-12, 4000, {0.0});
  EXPECT_NEAR(std::exp(r.log_value), 1.0, 1e-12);
}

TEST(Quadrature, LogMeasureAndFinalize) {
  Quadrature q;
  q.dim = 2;
  q.nodes = {Point{0.25, 0.5, 0.0}, Point{0.75, 0.5, 0.0}};
  q.log_weights = {std::log(0.5), -1000.0};
  q.finalize();
  EXPECT_NEAR(q.log_measure(), std::log(0.5 + std::exp(-1000.0)), 1e-15);
  EXPECT_DOUBLE_EQ(q.weights[0], 0.5);
}

TEST(Quadrature, SampledFunctionValidation) {
  auto q = std::make_shared<Quadrature>();
  q->nodes = {Point{}, Point{}};
  q->log_weights = {0.0, 0.0};
  q->finalize();
  SampledFunction f{q, {1.0}, {}};
  EXPECT_THROW(f.validate(), Error);
  f.values = {1.0, std::nan("")};
  EXPECT_THROW(f.validate(), Error);
  f.values = {1.0, 2.0};
  EXPECT_NO_THROW(f.validate());
}
