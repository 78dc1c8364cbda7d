#include <lfs/margin.hpp>

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

std::vector<double> cosines(std::size_t k)
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> c(k);
    for (auto& x : c) {
        x = d(gen);
    }
    return c;
}

void BM_UnifiedLoss(benchmark::State& state)
{
    const auto c = cosines(static_cast<std::size_t>(state.range(0)));
    const lfs::LogitRow row{c, 0, 32.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(lfs::unified_loss(-100.0, row));
    }
}
BENCHMARK(BM_UnifiedLoss)->Arg(10)->Arg(100)->Arg(1000);

void BM_UnifiedGradient(benchmark::State& state)
{
    const auto c = cosines(static_cast<std::size_t>(state.range(0)));
    const lfs::LogitRow row{c, 0, 32.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(lfs::unified_loss_gradient(-100.0, row));
    }
}
BENCHMARK(BM_UnifiedGradient)->Arg(10)->Arg(100)->Arg(1000);

void BM_MarginLossGradient(benchmark::State& state)
{
    const auto c = cosines(100);
    const lfs::LogitRow row{c, 0, 32.0};
    const auto spec = lfs::MarginSpec::combined(2, 0.3, 0.2);
    std::vector<double> g(c.size());
    for (auto _ : state) {
        benchmark::DoNotOptimize(lfs::loss_and_gradient(spec, row, g));
    }
}
BENCHMARK(BM_MarginLossGradient);

} // namespace
