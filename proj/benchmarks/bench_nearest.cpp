#include <benchmark/benchmark.h>

#include "carmsim/dataset.hpp"
#include "carmsim/geometry.hpp"
#include "carmsim/phantom.hpp"

namespace {

using namespace carmsim;

void BM_NearestK(benchmark::State& state) {
    static const Phantom p = generate_phantom(42);
    SamplerConfig sc;
    sc.seed = 1;
    const auto poses = sample_isocenters(p.volume, 1024, sc).poses;
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(nearest_k(poses[i++ % poses.size()].isocenter, p.landmarks, 3));
    }
}
BENCHMARK(BM_NearestK);

void BM_SampleIsocenters(benchmark::State& state) {
    static const Phantom p = generate_phantom(42);
    SamplerConfig sc;
    for (auto _ : state) {
        ++sc.seed;
        benchmark::DoNotOptimize(sample_isocenters(p.volume, static_cast<std::size_t>(state.range(0)), sc));
    }
}
BENCHMARK(BM_SampleIsocenters)->Arg(1024);

}  // namespace
