#include <benchmark/benchmark.h>

#include "sdde/atlas.hpp"
#include "sdde/builtin_models.hpp"
#include "sdde/sampling.hpp"
#include "sdde/semiflow.hpp"

using namespace sdde;

namespace {

struct Fixture {
  ModelPtr model;
  SegmentC1 phi;
  SegmentC1 chi;

  explicit Fixture(const std::string& id) : model(make_builtin(id)), phi(lift_to_manifold(*model, *model->witness())),
      chi(SegmentC1::zero(model->grid_ptr(), model->n())) {
    Rng rng = make_rng(3, "bench");
    chi = random_smooth_segment(rng, model->grid_ptr(), model->n());
  }
};

const char* kModels[] = {"ode", "eq1", "mvw", "twodelay"};

void BM_SegmentEval(benchmark::State& state) {
  Fixture fx(kModels[state.range(0)]);
  double t = -0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fx.phi.eval(t));
    t = t < -0.1 ? t + 1e-3 : -0.9;
  }
}
BENCHMARK(BM_SegmentEval)->Arg(0);

void BM_RhsF(benchmark::State& state) {
  Fixture fx(kModels[state.range(0)]);
  for (auto _ : state) benchmark::DoNotOptimize(fx.model->rhs_f(fx.phi));
}
BENCHMARK(BM_RhsF)->DenseRange(0, 3);

void BM_Df(benchmark::State& state) {
  Fixture fx(kModels[state.range(0)]);
  for (auto _ : state) benchmark::DoNotOptimize(fx.model->df(fx.phi, fx.chi));
}
BENCHMARK(BM_Df)->DenseRange(0, 3);

void BM_VectorBump(benchmark::State& state) {
  Fixture fx(kModels[state.range(0)]);
  for (auto _ : state) benchmark::DoNotOptimize(make_vector_bump(*fx.model, 0, -fx.model->r() / 2));
}
BENCHMARK(BM_VectorBump)->DenseRange(0, 3);

void BM_FrameJApply(benchmark::State& state) {
  Fixture fx(kModels[state.range(0)]);
  const Atlas atlas = build_atlas(fx.model, {fx.phi});
  const ChartJ* chart = atlas.chart_j(atlas.strata().front());
  const Vec w = fx.model->apply_L(fx.phi);
  const Vec x = Vec::Ones(fx.model->n());
  chart->frame().apply(w, x);  // fill the cache
  for (auto _ : state) benchmark::DoNotOptimize(chart->frame().apply(w, x));
}
BENCHMARK(BM_FrameJApply)->DenseRange(1, 3);

void BM_ChartInvert(benchmark::State& state) {
  Fixture fx(kModels[state.range(0)]);
  const Atlas atlas = build_atlas(fx.model, {fx.phi});
  const ChartImage img = atlas.chart_for(fx.phi);
  for (auto _ : state) benchmark::DoNotOptimize(atlas.invert(img.J, img.image));
}
BENCHMARK(BM_ChartInvert)->DenseRange(0, 3);

void BM_IntegrateUnitTime(benchmark::State& state) {
  Fixture fx(kModels[state.range(0)]);
  IntegrateOptions opt;
  opt.h = fx.model->r() / 40;
  opt.T = fx.model->r();
  for (auto _ : state) benchmark::DoNotOptimize(integrate(fx.model, fx.phi, opt));
}
BENCHMARK(BM_IntegrateUnitTime)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
