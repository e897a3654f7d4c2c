// Serial reference vs OpenMP kernels on a planted-signal dump.
// Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include "inspector/classifiers.hpp"
#include "inspector/features.hpp"
#include "inspector/forest.hpp"
#include "inspector/probes.hpp"
#include "inspector/selection.hpp"

#include <numeric>

using namespace inspector;

namespace {

const SyntheticData& data() {
    static const SyntheticData d = [] {
        SynthSpec spec;
        spec.seed = 1;
        return generate_synthetic_dump(spec);
    }();
    return d;
}

std::vector<int> all_rows() {
    std::vector<int> rows(data().dump.size());
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

void BM_LayerFeatures(benchmark::State& state) {
    const auto rows = all_rows();
    for (auto _ : state)
        for (int layer = 1; layer <= data().dump.manifest.num_layers; ++layer)
            benchmark::DoNotOptimize(compute_layer_features(data().dump, rows, layer, PoolMode::concat, mode(state)));
}

void BM_Sweep(benchmark::State& state) {
    const auto task = make_probe_task(all_rows(), data().scores, 4, 5, 1);
    SweepOptions opts;
    opts.evaluate_multi = false;
    opts.exec = mode(state);
    for (auto _ : state) benchmark::DoNotOptimize(sweep_and_rank(data().dump, task, opts));
}

void BM_GridLsvm(benchmark::State& state) {
    const auto x = concat_multilayer(data().dump, {5}, PoolMode::mean, true).values;
    const auto folds = stratified_kfold(data().binary, 5, 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(grid_search(Family::LSVM, x, data().binary, folds, PipelineOptions{}, 1, mode(state)));
}

void BM_Forest(benchmark::State& state) {
    const auto x = concat_multilayer(data().dump, {5}, PoolMode::mean, true).values;
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_random_forest(x, data().binary, ForestOptions{100}, mode(state)));
}

}  // namespace

BENCHMARK(BM_LayerFeatures)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridLsvm)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Forest)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
