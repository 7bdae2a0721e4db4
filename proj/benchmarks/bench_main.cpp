#include <benchmark/benchmark.h>

#include "furstenberg/certificate.hpp"
#include "furstenberg/circle.hpp"
#include "furstenberg/walk.hpp"
#include "furstenberg/words.hpp"

using namespace furst;

namespace {

void BM_cartan_decompose(benchmark::State& state) {
    Rng rng(1);
    std::vector<GroupElement> gs;
    for (int i = 0; i < 1024; ++i)
        gs.push_back(GroupElement::rotation(rng.uniform(0.0, kPi)) *
                     GroupElement::diagonal(rng.uniform(1.5, 50.0)) *
                     GroupElement::rotation(-rng.uniform(0.0, kPi)));
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cartan_decompose(gs[i++ & 1023]));
    }
}
BENCHMARK(BM_cartan_decompose);

void BM_walk_step(benchmark::State& state) {
    auto spec = build_two_gen(20);
    Rng rng(2);
    ScaledProduct prod;
    for (auto _ : state) {
        prod.right_multiply(spec.sample(rng));
    }
    benchmark::DoNotOptimize(prod.log_norm());
}
BENCHMARK(BM_walk_step);

void BM_heat_kernel_build(benchmark::State& state) {
    int k = static_cast<int>(state.range(0));
    double y = 1e-4;
    for (auto _ : state) {
        y *= 1.0000001; // fresh bandwidth so the cache never hits
        benchmark::DoNotOptimize(heat_kernel(k, y, kDefaultGridSize));
    }
}
// fixed iteration count: every iteration inserts a 2^14-sample kernel into
// the shared cache
BENCHMARK(BM_heat_kernel_build)->Arg(1)->Arg(6)->Arg(12)->Iterations(100);

void BM_detail(benchmark::State& state) {
    auto g = CircleMeasure::wrapped_gaussian(0.7, 0.05);
    for (auto _ : state) {
        benchmark::DoNotOptimize(detail(g, 0.02));
    }
}
BENCHMARK(BM_detail);

void BM_wasserstein_atomic(benchmark::State& state) {
    Rng rng(3);
    auto make = [&](std::size_t n) {
        std::vector<CircleMeasure::Atom> atoms;
        for (std::size_t i = 0; i < n; ++i)
            atoms.push_back({rng.uniform(0.0, kPi), 1.0 / n});
        return CircleMeasure::from_atoms(std::move(atoms));
    };
    auto a = make(state.range(0));
    auto b = make(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(wasserstein1(a, b));
    }
}
BENCHMARK(BM_wasserstein_atomic)->Arg(1000)->Arg(10000);

void BM_exact_entropy_level(benchmark::State& state) {
    auto spec = build_two_gen(5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(exact_product_entropy(spec, 6));
    }
}
BENCHMARK(BM_exact_entropy_level);

} // namespace

BENCHMARK_MAIN();
