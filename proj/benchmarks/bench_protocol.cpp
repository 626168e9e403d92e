#include <benchmark/benchmark.h>

#include "carmsim/protocol.hpp"

namespace {

using namespace carmsim;

const std::string kReply =
    "Looking at the radiograph, the field is centred over the upper thorax.\n"
    "<response><landmark index=\"10\">T1</landmark><reasoning>Spinous processes visible; skull is superior."
    "</reasoning><move x_dir=\"LEFT\" x_mag=\"SMALL\" y_dir=\"UP\" y_mag=\"LARGE\"/></response>\n";

void BM_ParseResponse(benchmark::State& state) {
    const auto& schema = LandmarkSchema::default_schema();
    for (auto _ : state) benchmark::DoNotOptimize(parse_response(kReply, schema));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(kReply.size()));
}
BENCHMARK(BM_ParseResponse);

void BM_ParseGarbage(benchmark::State& state) {
    const auto& schema = LandmarkSchema::default_schema();
    const std::string text(4096, '<');
    for (auto _ : state) benchmark::DoNotOptimize(parse_response(text, schema));
}
BENCHMARK(BM_ParseGarbage);

void BM_Serialize(benchmark::State& state) {
    const auto parsed = std::get<ParsedResponse>(parse_response(kReply, LandmarkSchema::default_schema()));
    for (auto _ : state) benchmark::DoNotOptimize(serialize(parsed.response));
}
BENCHMARK(BM_Serialize);

}  // namespace
