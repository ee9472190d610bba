#include <benchmark/benchmark.h>

#include "molab/conditions.hpp"
#include "molab/domain.hpp"
#include "molab/modular.hpp"

using namespace molab;

namespace {

ExponentField smooth_field() {
  return ExponentField(2, ScalarField::expression("1.5 + 0.5*x1", 2), ScalarField::expression("2.5 + 0.5*x2", 2),
                       ScalarField::expression("1 + x1*x2", 2), ScalarField::expression("x1^2", 2));
}

}  // namespace

static void BM_LuxemburgNorm(benchmark::State& state) {
  const DiscretizedDomain dom(make_square(), static_cast<std::size_t>(state.range(0)));
  const FamilyPtr fam = phi_family(PhiFunction(smooth_field()), dom.cells());
  SampledFunction u{dom.cells(), {}, {}};
  for (const Point& x : dom.cells()->nodes) u.values.push_back(1.0 + 3.0 * x[0] * x[1]);
  for (auto _ : state) benchmark::DoNotOptimize(luxemburg_norm(fam, u).value);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(u.values.size()));
}
BENCHMARK(BM_LuxemburgNorm)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_BallMeasureExpCusp(benchmark::State& state) {
  const ShapePtr cusp = make_exp_cusp();
  for (auto _ : state) benchmark::DoNotOptimize(ball_intersection_measure(*cusp, {0, 0, 0}, 0.1).log_value);
}
BENCHMARK(BM_BallMeasureExpCusp)->Unit(benchmark::kMicrosecond);

static void BM_BallMeasureCube(benchmark::State& state) {
  const ShapePtr cube = make_cube();
  for (auto _ : state) benchmark::DoNotOptimize(ball_intersection_measure(*cube, {0.1, 0.2, 0.0}, 0.3).log_value);
}
BENCHMARK(BM_BallMeasureCube)->Unit(benchmark::kMillisecond);

static void BM_VerifyA0(benchmark::State& state) {
  const PhiFunction phi(smooth_field());
  const SampleSet s = SampleSet::lattice(Box{2, {0, 0, 0}, {1, 1, 0}}, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(verify_A0(phi, s).passed());
}
BENCHMARK(BM_VerifyA0)->Arg(21)->Arg(61)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
