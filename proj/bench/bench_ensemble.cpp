#include <benchmark/benchmark.h>

#include <string>

#include "twotrap/collision.hpp"
#include "twotrap/ensemble.hpp"

using namespace twotrap;

namespace {

const Sequence& join_sequence() {
    static const Sequence seq = load_sequence_file(std::string(TWOTRAP_SOURCE_DIR) + "/sequences/join.seq");
    return seq;
}

void bm_ensemble_serial(benchmark::State& state) {
    const auto trials = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        auto recs = run_ensemble_serial(join_sequence(), initial_world(), join_noise(), trials, 1);
        benchmark::DoNotOptimize(recs.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_ensemble_parallel(benchmark::State& state) {
    const auto trials = static_cast<std::uint64_t>(state.range(0));
    set_workers(static_cast<int>(state.range(1)));
    for (auto _ : state) {
        auto recs = run_ensemble(join_sequence(), initial_world(), join_noise(), trials, 1);
        benchmark::DoNotOptimize(recs.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
    set_workers(0);
}

FluorescenceStudy study(long shots) {
    FluorescenceStudy s;
    s.mean_atoms = 19.0;
    s.wells = 25;
    s.n_shots = shots;
    return s;
}

void bm_fluorescence_serial(benchmark::State& state) {
    const auto s = study(state.range(0));
    for (auto _ : state) {
        auto t = fluorescence_trace_serial(s, 1);
        benchmark::DoNotOptimize(t.mean_signal.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_fluorescence_parallel(benchmark::State& state) {
    const auto s = study(state.range(0));
    set_workers(static_cast<int>(state.range(1)));
    for (auto _ : state) {
        auto t = fluorescence_trace(s, 1);
        benchmark::DoNotOptimize(t.mean_signal.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
    set_workers(0);
}

}  // namespace

BENCHMARK(bm_ensemble_serial)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(bm_ensemble_parallel)->Args({10000, 1})->Args({10000, 2})->Args({10000, 4})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(bm_fluorescence_serial)->Arg(2000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(bm_fluorescence_parallel)->Args({2000, 1})->Args({2000, 2})->Args({2000, 4})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
