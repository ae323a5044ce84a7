#include <canopyforge/gradcheck.hpp>
#include <canopyforge/losses.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace canopyforge;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& v : t.data) v = n(rng);
    return t;
}

void BM_TeacherLoss(benchmark::State& state) {
    const auto s = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    const StructureMaps p{random_tensor({s, s}, rng), random_tensor({s, s}, rng), random_tensor({s, s}, rng)};
    const StructureMaps t{random_tensor({s, s}, rng), random_tensor({s, s}, rng), random_tensor({s, s}, rng)};
    const Mask m(s, s);
    for (auto _ : state) benchmark::DoNotOptimize(teacher_loss(p, t, m).total);
}
BENCHMARK(BM_TeacherLoss)->Arg(224)->Unit(benchmark::kMillisecond);

void BM_FeatureDistill(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const Tensor s = random_tensor({64, 56, 56}, rng);
    const Tensor t = random_tensor({128, 56, 56}, rng);
    const Tensor p = random_tensor({128, 64}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(feature_distill_loss(s, t, p).total);
}
BENCHMARK(BM_FeatureDistill)->Unit(benchmark::kMillisecond);

void BM_GradCheckSuite(benchmark::State& state) {
    const auto cases = standard_gradcheck_cases();
    for (auto _ : state)
        for (const auto& c : cases) benchmark::DoNotOptimize(finite_difference_check(c.kernel, c.inputs).max_rel_error);
}
BENCHMARK(BM_GradCheckSuite)->Unit(benchmark::kMillisecond);

} // namespace
