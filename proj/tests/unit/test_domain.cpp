#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "molab/domain.hpp"

using namespace molab;

TEST(Shapes, Membership) {
  EXPECT_TRUE(make_disk()->contains({0.5, 0.5, 0}));
  EXPECT_FALSE(make_disk()->contains({0.8, 0.8, 0}));
  EXPECT_TRUE(make_exp_cusp()->contains({0.5, 0.1, 0}));
  EXPECT_FALSE(make_exp_cusp()->contains({0.5, 0.2, 0}));
  EXPECT_TRUE(make_power_cusp(2)->contains({0.5, 0.2, 0}));
  EXPECT_FALSE(make_power_cusp(2)->contains({0.5, 0.3, 0}));
  EXPECT_EQ(make_cube()->dim(), 3);
}

TEST(Shapes, GalleryBuildsEveryEntry) {
  for (const GalleryEntry& g : shape_gallery())
    EXPECT_NO_THROW(make_shape(json{{"shape", g.name}, {"params", g.default_params}})) << g.name;
  EXPECT_THROW(make_shape(json{{"shape", "blob"}}), ConfigError);
}

TEST(Discretization, Measures) {
  EXPECT_NEAR(DiscretizedDomain(make_square(), 32).measure(), 1.0, 1e-12);
  EXPECT_NEAR(DiscretizedDomain(make_disk(), 128).measure(), M_PI, 2e-3);
  EXPECT_NEAR(DiscretizedDomain(make_l_shape(), 64).measure(), 3.0, 1e-9);
}

TEST(Discretization, NodeOrderFollowsFlatCellIndex) {
  const DiscretizedDomain d(make_disk(), 16);
  std::size_t node = 0;
  const auto& c = d.counts();
  for (std::size_t i = 0; i < c[0]; ++i)
    for (std::size_t j = 0; j < c[1]; ++j) {
      if (d.cell_fraction(i * c[1] + j) <= 0.0) continue;
      const Point ctr = d.cell_center({i, j, 0});
      EXPECT_LT(distance(ctr, d.cells()->nodes[node], 2), d.cell_size());
      ++node;
    }
  EXPECT_EQ(node, d.cells()->size());
}

TEST(BallMeasure, BoundaryFractions) {
  const double R = 0.1;
  const double full = M_PI * R * R;
  EXPECT_NEAR(ball_intersection_measure(*make_half_space(2), {0, 0, 0}, R).value, full / 2, 1e-12);
  EXPECT_NEAR(ball_intersection_measure(*make_square(), {0, 0, 0}, R).value, full / 4, 1e-12);
  EXPECT_NEAR(ball_intersection_measure(*make_square(), {0.5, 0.5, 0}, R).value, full, 1e-12);
  EXPECT_NEAR(ball_intersection_measure(*make_cube(), {0, 0, 0}, R).value, 4.0 / 3.0 * M_PI * R * R * R / 8, 1e-12);
}

TEST(BallMeasure, ExponentialCuspTip) {
  // |B_R(0) ∩ cusp| = int 2 min(e^{-1/x}, sqrt(R^2 - x^2)) dx over (0, R), split where the two curves cross
  using boost::math::quadrature::gauss_kronrod;
  for (double R : {0.2, 0.1, 0.05}) {
    double lo = 0.5 * R, hi = R;
    for (int i = 0; i < 200; ++i) {
      const double m = 0.5 * (lo + hi);
      (std::exp(-1.0 / m) < std::sqrt(R * R - m * m) ? lo : hi) = m;
    }
    const double want =
        gauss_kronrod<double, 61>::integrate([](double x) { return x > 0 ? 2.0 * std::exp(-1.0 / x) : 0.0; }, 0.0, lo,
                                             20, 1e-15) +
        gauss_kronrod<double, 61>::integrate([R](double x) { return 2.0 * std::sqrt(std::max(0.0, R * R - x * x)); },
                                             lo, R, 20, 1e-15);
    const BallMeasure m = ball_intersection_measure(*make_exp_cusp(), {0, 0, 0}, R);
    EXPECT_NEAR(m.value / want, 1.0, 1e-8) << R;
  }
  // R = 0.2, high-precision reference
  EXPECT_NEAR(ball_intersection_measure(*make_exp_cusp(), {0, 0, 0}, 0.2).value / 3.980798508120954627e-4, 1.0, 1e-10);
  // deep tip, log form: |A_R| ~ 2 R^2 e^{-1/R}
  const BallMeasure deep = ball_intersection_measure(*make_exp_cusp(), {0, 0, 0}, 1e-3);
  EXPECT_NEAR(deep.log_value, std::log(2e-6) - 1000.0, 5e-3);
}

TEST(BallMeasure, GridEstimateAgrees) {
  const DiscretizedDomain d(make_disk(), 256);
  const BallMeasure exact = ball_intersection_measure(*make_disk(), {0.9, 0.0, 0}, 0.3);
  const BallMeasure grid = ball_intersection_measure(d, {0.9, 0.0, 0}, 0.3);
  EXPECT_NEAR(grid.value / exact.value, 1.0, 5e-3);
}

TEST(Halving, InteriorAndBoundary) {
  const HalvingResult h = halving_radius(*make_square(), {0.5, 0.5, 0}, 0.2);
  EXPECT_NEAR(h.radius, 0.2 / std::sqrt(2.0), 1e-10);
  const HalvingResult b = halving_radius(*make_half_space(2), {0, 0, 0}, 0.4);
  EXPECT_NEAR(b.radius, 0.4 / std::sqrt(2.0), 1e-10);
  EXPECT_LT(b.relative_error, 1e-9);
}

TEST(LocalQuadrature, MeasureAndCutoff) {
  const Point x{0.0, 0.0, 0};
  const double R = 0.1;
  const auto q = local_ball_quadrature(*make_exp_cusp(), x, R, {0.05});
  const BallMeasure m = ball_intersection_measure(*make_exp_cusp(), x, R);
  EXPECT_NEAR(q->log_measure(), m.log_value, 1e-8);
  const SampledFunction u = make_cutoff(q, x, R, 0.05);
  for (std::size_t i = 0; i < q->size(); ++i) {
    const double d = distance(q->nodes[i], x, 2);
    const double want = d <= 0.05 ? 1.0 : d >= R ? 0.0 : (R - d) / (R - 0.05);
    EXPECT_NEAR(u.values[i], want, 1e-12);
  }
  EXPECT_THROW(local_ball_quadrature(*make_cube(), Point{0.5, 0.5, 0.5}, 0.1), InvalidArgument);
}

TEST(DensityScan, SquareCenterRatioIsPi) {
  const DensityScan s = scan_measure_density(*make_square(), {Point{0.5, 0.5, 0}}, 2.0, 0.0, halving_radius_grid(6));
  for (const DensityRow& r : s.table) EXPECT_NEAR(std::exp(r.log_ratio), M_PI, 1e-10);
  EXPECT_TRUE(s.monotone);
  EXPECT_EQ(s.decay, DecayKind::none);
}

TEST(DensityScan, CuspsDecay) {
  const DensityScan pc = scan_measure_density(*make_power_cusp(2), {Point{0, 0, 0}}, 2.0, 0.0, halving_radius_grid(10));
  EXPECT_EQ(pc.decay, DecayKind::polynomial);
  EXPECT_NEAR(pc.decay_rate, 1.0, 0.05);  // |A_R| ~ R^3 against R^2
  const DensityScan ec = scan_measure_density(*make_exp_cusp(), {Point{0, 0, 0}}, 2.0, 0.0, halving_radius_grid(10));
  EXPECT_EQ(ec.decay, DecayKind::super_polynomial);
}

TEST(John, DiskHasNoWitnessExpCuspHasOne) {
  std::vector<Point> disk_targets;
  for (int k = 0; k < 16; ++k) disk_targets.push_back({0.95 * std::cos(k * 0.4), 0.95 * std::sin(k * 0.4), 0});
  EXPECT_EQ(john_witness(*make_disk(), {0, 0, 0}, disk_targets).verdict, "no witness found");
  const JohnWitness w = john_witness(*make_exp_cusp(), {0.8, 0, 0}, {Point{0.05, 0, 0}, Point{0.02, 0, 0}});
  EXPECT_EQ(w.verdict, "witness");
}
