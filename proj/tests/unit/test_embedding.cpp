#include <gtest/gtest.h>

#include <cmath>

#include "molab/embedding.hpp"

using namespace molab;

namespace {

ExponentField field(int dim, const char* p, const char* q, const char* r, const char* a) {
  return ExponentField(dim, ScalarField::expression(p, dim), ScalarField::expression(q, dim),
                       ScalarField::expression(r, dim), ScalarField::expression(a, dim));
}

double fd_gradient_norm(const TrialSpec& t, const Point& y) {
  const double h = 1e-6;
  double g2 = 0.0;
  for (int k = 0; k < t.dim; ++k) {
    Point a = y, b = y;
    a[k] += h;
    b[k] -= h;
    const double d = (t.eval(a).first - t.eval(b).first) / (2 * h);
    g2 += d * d;
  }
  return std::sqrt(g2);
}

}  // namespace

TEST(Trials, FamilyComposition) {
  const Box box{3, {0, 0, 0}, {1, 1, 1}};
  const auto fam = trial_family(box, 50, 9);
  ASSERT_EQ(fam.size(), 50u);
  int counts[5] = {0, 0, 0, 0, 0};
  for (const auto& t : fam) ++counts[static_cast<int>(t.kind)];
  EXPECT_EQ(counts[static_cast<int>(TrialKind::radial_bump)], 20);
  EXPECT_EQ(counts[static_cast<int>(TrialKind::tensor_bump)], 10);
  EXPECT_EQ(counts[static_cast<int>(TrialKind::cutoff)], 10);
  EXPECT_EQ(counts[static_cast<int>(TrialKind::trig)], 10);
  const auto again = trial_family(box, 50, 9);
  for (std::size_t i = 0; i < fam.size(); ++i) EXPECT_EQ(fam[i].to_json(), again[i].to_json());
}

TEST(Trials, GradientsMatchFiniteDifferences) {
  const Box box{2, {0, 0, 0}, {1, 1, 0}};
  for (const TrialSpec& t : trial_family(box, 20, 4)) {
    for (const Point& y : {Point{0.31, 0.47, 0}, Point{0.52, 0.61, 0}, Point{0.73, 0.29, 0}}) {
      const auto [u, g] = t.eval(y);
      if (t.kind == TrialKind::cutoff) {
        const double d = distance(y, t.center, 2);
        if (std::fabs(d - t.radius) < 1e-4 || std::fabs(d - t.inner_radius) < 1e-4) continue;
      }
      EXPECT_NEAR(g, fd_gradient_norm(t, y), 1e-5 * (1 + g)) << t.label;
      EXPECT_TRUE(std::isfinite(u));
    }
  }
}

TEST(Indicator, ClosedFormQuarterSet) {
  // p = 2, a = 0, |A| = 1/4: rho(1_A / l) = 1/(4 l^2) = 1 at l = 1/2
  DiscretizedDomain dom(make_square(), 64);
  const PhiFunction phi(field(2, "2", "2", "0", "0"), PhiMode::equal);
  std::vector<std::size_t> set;
  for (std::size_t i = 0; i < dom.cells()->size(); ++i) {
    const Point& x = dom.cells()->nodes[i];
    if (x[0] < 0.5 && x[1] < 0.5) set.push_back(i);
  }
  SampledFunction f{dom.cells(), std::vector<double>(dom.cells()->size(), 0.0), {}};
  for (std::size_t i : set) f.values[i] = 1.0;
  EXPECT_NEAR(luxemburg_norm(phi_family(phi, dom.cells()), f).value, 0.5, 1e-8);
  const VerificationReport r = check_indicator_norm_bounds(phi, dom.cells(), {set}, SignRegime::nonnegative);
  EXPECT_TRUE(r.passed);
}

TEST(Indicator, BoundsFormula) {
  const IndicatorBounds b = indicator_norm_bounds(SignRegime::nonnegative, 0.25, 2.0, 1.5, 1.0, 1.0);
  EXPECT_NEAR(b.lower, std::pow(0.25, 1.0 / 1.5), 1e-14);
  const double k = 2.0 * std::pow(2.0, 1.0 / 1.5);
  const double t1 = std::sqrt(0.25) * std::log(std::exp(1.0) + 4.0);
  const double t2 = std::pow(0.25, 1.0 / 1.5) * std::log(1.0 + std::exp(1.0));
  EXPECT_NEAR(b.upper, k * std::max(t1, t2), 1e-13);
  const IndicatorBounds m = indicator_norm_bounds(SignRegime::mixed, 0.25, 2.0, 1.5, -0.5, 1.0);
  EXPECT_NEAR(m.upper, 2.0 * k * std::max(0.5, std::pow(0.25, 1.0 / 1.5)), 1e-13);
  EXPECT_THROW(indicator_norm_bounds(SignRegime::mixed, 0.6, 2.0, 1.5, 0.0, 1.0), InvalidArgument);
}

TEST(Indicator, RandomUnionsPerRegime) {
  DiscretizedDomain dom(make_square(), 48);
  const auto sets = random_cell_unions(dom, 40, 0.45, 3);
  ASSERT_EQ(sets.size(), 40u);
  struct Case {
    const char* r;
    SignRegime regime;
  };
  for (const Case c : {Case{"0.2 + 0.5*x2", SignRegime::nonnegative}, Case{"-0.2 - 0.7*x2", SignRegime::nonpositive},
                       Case{"x2 - 0.5", SignRegime::mixed}}) {
    const PhiFunction phi(field(2, "1.3 + 0.4*x1", "1.3 + 0.4*x1", c.r, "0.5 + x1"), PhiMode::equal);
    EXPECT_TRUE(check_indicator_norm_bounds(phi, dom.cells(), sets, c.regime).passed) << c.r;
  }
  const PhiFunction mixed(field(2, "1.5", "1.5", "x2 - 0.5", "1"), PhiMode::equal);
  EXPECT_THROW(check_indicator_norm_bounds(mixed, dom.cells(), sets, SignRegime::nonnegative), InvalidArgument);
  const PhiFunction general(field(2, "1.5", "1.8", "0", "1"));
  EXPECT_THROW(check_indicator_norm_bounds(general, dom.cells(), sets, SignRegime::nonnegative), InvalidArgument);
}

TEST(RadiusGap, HoldsAtMeasuredConstantAndFailsBelow) {
  const PhiFunction phi(field(2, "1.5", "1.5", "0", "0"), PhiMode::equal);
  const auto hs = make_half_space(2);
  const Point x{0, 0, 0};
  const CutoffRatio cr = cutoff_embedding_ratio(phi, *hs, x, 0.25);
  EXPECT_NEAR(cr.R_tilde, 0.25 / std::sqrt(2.0), 1e-10);
  const double c1 = std::exp(cr.log_ratio) * (1 + 1e-6);
  EXPECT_TRUE(check_radius_gap_lemma(phi, *hs, x, 0.25, c1).passed);
  EXPECT_FALSE(check_radius_gap_lemma(phi, *hs, x, 0.25, 0.5 * c1).passed);
}

TEST(Necessity, HalfPlaneTrace) {
  const PhiFunction phi(field(2, "1.5", "1.5", "0", "0"), PhiMode::equal);
  NecessityOptions o;
  o.levels = 10;
  const NecessityTrace t = run_necessity_trace(phi, *make_half_space(2), {0, 0, 0}, 0.5, o);
  ASSERT_EQ(t.levels.size(), 11u);
  for (const auto& l : t.levels) {
    EXPECT_EQ(l.eta_R, 0.5);
    EXPECT_NEAR(l.log_density_plain, std::log(M_PI / 2), 1e-9);
  }
  EXPECT_LT(t.telescoping_error, 1e-12);
  EXPECT_NEAR(t.levels[10].R, 0.5 * std::pow(0.5, 5.0), 1e-10);
}

TEST(Necessity, CuspSweepDecays) {
  const PhiFunction phi(field(2, "1.5", "1.5", "0.5", "1"), PhiMode::equal);
  const NecessitySweep s = run_necessity_sweep(phi, *make_exp_cusp(), {0, 0, 0}, {0.5, 0.1, 0.02, 0.004, 0.001});
  EXPECT_TRUE(s.density_monotone);
  EXPECT_GT(s.log_density_drop, std::log(10.0));
  EXPECT_GT(s.log_ratio_growth, std::log(10.0));
}

TEST(Thresholds, R0) {
  const R0Threshold t = compute_r0_threshold(0.0, 2);
  EXPECT_DOUBLE_EQ(t.r0, 0.125);
  EXPECT_DOUBLE_EQ(t.eta_tilde, 0.5);
  const R0Threshold u = compute_r0_threshold(1.0, 2);
  EXPECT_NEAR(u.r0, 0.25 * std::exp(-2.0), 1e-16);
  EXPECT_NEAR(u.eta_tilde, 0.5 - 1.0 / std::log(1.0 / (2.0 * u.r0)), 1e-15);
}

TEST(IntegralTest, SumsMatchClosedForms) {
  // x = 2^{-eta}: sum i^k x^i for k = 0..3
  for (double eta : {0.1, 0.5, 1.0}) {
    const double x = std::pow(2.0, -eta);
    const double s0 = x / (1 - x);
    const double s1 = x / std::pow(1 - x, 2);
    const double s2 = x * (1 + x) / std::pow(1 - x, 3);
    const double s3 = x * (1 + 4 * x + x * x) / std::pow(1 - x, 4);
    EXPECT_NEAR(integral_test_sum(0, eta) / s0, 1.0, 1e-13);
    EXPECT_NEAR(integral_test_sum(1, eta) / s1, 1.0, 1e-13);
    EXPECT_NEAR(integral_test_sum(2, eta) / s2, 1.0, 1e-13);
    EXPECT_NEAR(integral_test_sum(3, eta) / s3, 1.0, 1e-13);
  }
}

TEST(IntegralTest, StatedBoundFailsForCubicTerms) {
  // at eta = 1 the sum is exactly 26 while 3!/(ln 2)^4 = 25.99...
  EXPECT_NEAR(integral_test_sum(3, 1.0), 26.0, 1e-12);
  EXPECT_LT(integral_test_bound(3, 1.0), 26.0);
  const VerificationReport r = check_integral_test({3}, {0.1, 0.5, 1.0});
  EXPECT_EQ(r.violations, 3u);
  // the integral plus the largest term bounds every case
  for (const auto& row : r.details.at("rows")) EXPECT_LE(row.at("sum").get<double>(), row.at("bound_plus_max_term").get<double>());
}

TEST(Hypotheses, CubeFieldCertifiesAndStepFieldDoesNot) {
  const auto cube = make_cube();
  const PhiFunction good(field(3, "1.6 + 0.2*x1", "1.8 + 0.2*x1", "0.5 + 0.3*x2", "abs(x3 - 0.5)"));
  HypothesisOptions o;
  o.balls.balls = 200;
  const HypothesisReport h = certify_embedding_hypotheses(good, *cube, o);
  EXPECT_TRUE(h.certified) << json(h.failures).dump();
  // p+ + r+ = 2.8 but q+ + r+ = 3.0 reaches n
  const PhiFunction bad(field(3, "1.6 + 0.2*x1", "1.9 + 0.3*x1", "0.5 + 0.3*x2", "abs(x3 - 0.5)"));
  const HypothesisReport hb = certify_embedding_hypotheses(bad, *cube, o);
  EXPECT_FALSE(hb.certified);
  DiscretizedDomain dom(cube, 8);
  EXPECT_THROW(run_embedding_trials(bad, dom, trial_family(cube->bounding_box(), 5), hb), InvalidArgument);
}

TEST(Embedding, CalibrationRatioIsOne) {
  // t^2 in n = 3: |1|_{L^6} = 1 and |1|_{W^{1,2}} = 1 on the unit cube
  const auto cube = make_cube();
  const PhiFunction phi(field(3, "2", "2", "0", "0"));
  DiscretizedDomain dom(cube, 16);
  TrialSpec one;
  one.dim = 3;
  one.label = "one";
  HypothesisReport ok;
  const EmbeddingResult r = run_embedding_trials(phi, dom, {one}, ok);
  EXPECT_NEAR(r.max_ratio, 1.0, 1e-12);
}
