#include <benchmark/benchmark.h>

#include "fband/market/backtest.hpp"
#include "fband/market/synth.hpp"
#include "fband/study.hpp"

using namespace fband;

namespace {

StudyConfig study_config() {
    StudyConfig cfg;
    cfg.model = Model::far2;
    cfg.T = 50;
    cfg.l = 23;
    cfg.N = 200;
    return cfg;
}

const std::vector<market::AuctionBook>& books() {
    static const auto b = [] {
        market::SynthConfig sc;
        sc.days = 150;
        return market::generate_books(sc);
    }();
    return b;
}

void BM_StudySerial(benchmark::State& state) {
    const auto cfg = study_config();
    for (auto _ : state) benchmark::DoNotOptimize(run_study_serial(cfg));
}

void BM_StudyParallel(benchmark::State& state) {
    const auto cfg = study_config();
    for (auto _ : state) benchmark::DoNotOptimize(run_study(cfg, static_cast<int>(state.range(0))));
}

void BM_BacktestSerial(benchmark::State& state) {
    const market::MarketConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(market::rolling_backtest_serial(books(), cfg, 0.25));
}

void BM_BacktestParallel(benchmark::State& state) {
    const market::MarketConfig cfg;
    for (auto _ : state)
        benchmark::DoNotOptimize(market::rolling_backtest(books(), cfg, 0.25, static_cast<int>(state.range(0))));
}

}  // namespace

BENCHMARK(BM_StudySerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StudyParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BacktestSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BacktestParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
