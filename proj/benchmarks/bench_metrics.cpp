#include <canopyforge/ground.hpp>
#include <canopyforge/voxel_metrics.hpp>

#include "support/fixtures.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace canopyforge;

namespace {

HagCloud cloud_for(std::int64_t side, std::size_t points_per_cell) {
    std::mt19937_64 rng(7);
    const auto s = static_cast<double>(side);
    return testing::random_hag_cloud(static_cast<std::size_t>(side * side) * points_per_cell, s, s, 45.0, rng);
}

void BM_BinAndPad(benchmark::State& state) {
    const std::int64_t side = state.range(0);
    const HagCloud hag = cloud_for(side, 16);
    const GridSpec g = testing::make_grid(side, side);
    const PadParams p;
    for (auto _ : state) {
        const PadGrid pad = compute_pad(bin_returns(hag, g, p), p);
        benchmark::DoNotOptimize(pad.pad.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(hag.points.size()));
}
BENCHMARK(BM_BinAndPad)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Percentiles(benchmark::State& state) {
    const std::int64_t side = state.range(0);
    const HagCloud hag = cloud_for(side, 16);
    const GridSpec g = testing::make_grid(side, side);
    for (auto _ : state) {
        auto r = compute_percentiles(hag, g, kDefaultPercentiles);
        benchmark::DoNotOptimize(r.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(hag.points.size()));
}
BENCHMARK(BM_Percentiles)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_GroundAndHag(benchmark::State& state) {
    const PointCloud cloud = testing::synthetic_forest(static_cast<std::size_t>(state.range(0)), 200.0, 3);
    for (auto _ : state) {
        const GroundGrid ground = build_ground_grid(cloud);
        const HagCloud hag = compute_hag(cloud, ground);
        benchmark::DoNotOptimize(hag.points.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GroundAndHag)->Arg(100000)->Unit(benchmark::kMillisecond);

} // namespace
