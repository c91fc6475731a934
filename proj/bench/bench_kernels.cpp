// Serial vs OpenMP kernels on a synthetic score matrix.

#include <benchmark/benchmark.h>

#include <memory>

#include "uconf/kernels.hpp"
#include "uconf/synth.hpp"

namespace {

using namespace uconf;

struct Fixture {
    ScoreMatrix data = generate(make_separable_task(0.5, 1), 20000, 3);
    std::shared_ptr<const CostModel> cost =
        std::make_shared<const CostModel>(CostModel::separable(quarter_penalties(20, 7)));
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

ScoreMethod method_for(int index) {
    switch (index) {
        case 0: return ScoreMethod::base();
        case 1: return ScoreMethod::penalized(fixture().cost, 1.0);
        case 2: return ScoreMethod::ratio(fixture().cost);
        default: return ScoreMethod::greedy_order(fixture().cost, 0.1);
    }
}

template <bool Parallel>
void BM_TrueLabelScores(benchmark::State& state) {
    const auto method = method_for(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto scores = Parallel ? parallel::true_label_scores(method, fixture().data)
                               : serial::true_label_scores(method, fixture().data);
        benchmark::DoNotOptimize(scores.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(fixture().data.size()));
}

template <bool Parallel>
void BM_Outcomes(benchmark::State& state) {
    const auto method = method_for(static_cast<int>(state.range(0)));
    const auto predictor = calibrate(method, fixture().data, 0.1);
    for (auto _ : state) {
        auto out = Parallel ? parallel::outcomes(predictor, fixture().data, fixture().cost.get())
                            : serial::outcomes(predictor, fixture().data, fixture().cost.get());
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(fixture().data.size()));
}

BENCHMARK(BM_TrueLabelScores<false>)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrueLabelScores<true>)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Outcomes<false>)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Outcomes<true>)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
