#include <canopyforge/evaluation.hpp>
#include <canopyforge/raster.hpp>
#include <canopyforge/stitching.hpp>

#include "support/fixtures.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace canopyforge;

namespace {

void BM_Evaluate(benchmark::State& state) {
    std::mt19937_64 rng(3);
    const GridSpec g = testing::make_grid(state.range(0), state.range(0));
    const MetricRaster a = testing::random_raster(g, rng, 0.05);
    const MetricRaster b = testing::random_raster(g, rng, 0.05);
    const MaskRaster m(g, true);
    for (auto _ : state) benchmark::DoNotOptimize(evaluate(a, b, m, 2.0).bands.size());
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.cell_count()));
}
BENCHMARK(BM_Evaluate)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_BlendStitch(benchmark::State& state) {
    const WindowPlan plan = plan_windows(1000, 1000, kWindowSize, 32);
    std::vector<std::vector<double>> preds(plan.windows.size(),
                                           std::vector<double>(static_cast<std::size_t>(kWindowSize * kWindowSize), 3.0));
    const GridSpec g = testing::make_grid(1000, 1000, 0.2);
    for (auto _ : state) benchmark::DoNotOptimize(blend_stitch(plan, preds, g).values.data());
}
BENCHMARK(BM_BlendStitch)->Unit(benchmark::kMillisecond);

void BM_ResampleBilinear(benchmark::State& state) {
    std::mt19937_64 rng(4);
    const MetricRaster src = testing::random_raster(testing::make_grid(200, 200, 1.0), rng, 0.02);
    for (auto _ : state) benchmark::DoNotOptimize(resample(src, 0.2, ResampleMethod::bilinear).values.data());
}
BENCHMARK(BM_ResampleBilinear)->Unit(benchmark::kMillisecond);

} // namespace
