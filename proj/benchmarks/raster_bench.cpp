#include <benchmark/benchmark.h>

#include <random>

#include "farmmind/raster.hpp"
#include "farmmind/rle.hpp"

using namespace farmmind;

namespace {

ConfidenceMap random_conf(int size, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> dist(-5.0f, 5.0f);
    std::vector<float> values(static_cast<std::size_t>(size) * size);
    for (auto& v : values)
        v = dist(rng);
    return ConfidenceMap(size, size, std::move(values));
}

BinaryMask random_bin(int size, double density, unsigned seed) {
    std::mt19937 rng(seed);
    std::bernoulli_distribution coin(density);
    std::vector<std::uint8_t> values(static_cast<std::size_t>(size) * size);
    for (auto& v : values)
        v = coin(rng) ? 1 : 0;
    return BinaryMask(size, size, std::move(values));
}

}  // namespace

static void BM_Binarize(benchmark::State& state) {
    const auto conf = random_conf(static_cast<int>(state.range(0)), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(binarize_confidence(conf, 1.0));
    state.SetItemsProcessed(state.iterations() * conf.size());
}
BENCHMARK(BM_Binarize)->Arg(128)->Arg(512);

static void BM_ConnectedComponents(benchmark::State& state) {
    const auto mask = random_bin(static_cast<int>(state.range(0)),
                                 state.range(1) / 100.0, 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(label_connected_components(mask, Connectivity::eight));
    state.SetItemsProcessed(state.iterations() * mask.size());
}
BENCHMARK(BM_ConnectedComponents)->Args({128, 20})->Args({128, 50})->Args({512, 50});

static void BM_RegisterMask(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto aux = random_bin(n, 0.5, 3);
    const GeoTransform target{10.0, 50.0, 1.0 / n, -1.0 / n};
    const GeoTransform aux_geo{10.0, 50.0, 0.5 / n, -0.5 / n};
    const Bbox box{0, 0, n, n};
    for (auto _ : state)
        benchmark::DoNotOptimize(register_mask(aux, aux_geo, target, n, n, box));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n);
}
BENCHMARK(BM_RegisterMask)->Arg(128)->Arg(512);

static void BM_RleRoundTrip(benchmark::State& state) {
    const auto mask = random_bin(512, state.range(0) / 100.0, 4);
    for (auto _ : state) {
        auto runs = rle_encode(mask);
        benchmark::DoNotOptimize(rle_decode(runs, mask.width(), mask.height()));
    }
}
BENCHMARK(BM_RleRoundTrip)->Arg(5)->Arg(50);

BENCHMARK_MAIN();
