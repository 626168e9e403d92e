#include <benchmark/benchmark.h>

#include "carmsim/phantom.hpp"
#include "carmsim/projector.hpp"

namespace {

using namespace carmsim;

const Phantom& scene() {
    static const Phantom p = generate_phantom(42);
    return p;
}

void BM_Render(benchmark::State& state) {
    CArmPose pose;
    pose.isocenter = scene().landmarks.at(11).position;
    pose.geometry.cols = pose.geometry.rows = static_cast<int>(state.range(0));
    RenderOptions opts;
    opts.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(render(scene().volume, pose, opts));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_Render)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_LineIntegral(benchmark::State& state) {
    const auto& v = scene().volume;
    const Vec3 from(250, -600, 450), to(250, 750, 450);
    for (auto _ : state) benchmark::DoNotOptimize(line_integral(v, from, to, 2.0));
}
BENCHMARK(BM_LineIntegral);

void BM_GeneratePhantom(benchmark::State& state) {
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(generate_phantom(++seed));
}
BENCHMARK(BM_GeneratePhantom)->Unit(benchmark::kMillisecond);

}  // namespace
