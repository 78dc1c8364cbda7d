#include <lfs/model.hpp>

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

lfs::DenseMatrix batch(std::size_t n, std::size_t d)
{
    std::mt19937_64 gen(11);
    std::normal_distribution<double> dist;
    lfs::DenseMatrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (double& x : m.row(i)) {
            x = dist(gen);
        }
    }
    return m;
}

void BM_Forward(benchmark::State& state)
{
    const std::vector<std::size_t> dims{32, 128, 64};
    const auto net = lfs::init_network(dims, 50, 32.0, lfs::RngStream(1, "bench"));
    const auto x = batch(static_cast<std::size_t>(state.range(0)), 32);
    for (auto _ : state) {
        benchmark::DoNotOptimize(lfs::forward(net, x));
    }
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(128);

void BM_ForwardBackward(benchmark::State& state)
{
    const std::vector<std::size_t> dims{32, 128, 64};
    const auto net = lfs::init_network(dims, 50, 32.0, lfs::RngStream(1, "bench"));
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = batch(n, 32);
    const auto upstream = batch(n, 50);
    for (auto _ : state) {
        const auto cache = lfs::forward(net, x);
        benchmark::DoNotOptimize(lfs::backward(net, cache, upstream));
    }
}
BENCHMARK(BM_ForwardBackward)->Arg(32)->Arg(128);

} // namespace
