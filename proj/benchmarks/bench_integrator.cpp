#include <benchmark/benchmark.h>

#include <cmath>

#include "setiss/dde.hpp"
#include "setiss/systems.hpp"

using namespace setiss;

namespace {

// steps/second of the method-of-steps core; items processed = RK4 steps
void BM_integrate_oscillator(benchmark::State& state) {
    const double delay = state.range(0) == 0 ? 0.0 : 1.0 / static_cast<double>(state.range(0));
    auto sys = systems::oscillator_system({}, delay > 0.0);
    sys.delay = delay;
    const auto init = HistoryWindow::constant(std::vector<double>{1.0, 1.0}, delay);
    const auto w = dde::DisturbanceSignal::step(0.0, {0.05});
    const double h = 1e-3;
    const double T = 10.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(dde::integrate(sys, init, w, T, h));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(T / h));
}
BENCHMARK(BM_integrate_oscillator)->Arg(0)->Arg(10)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_integrate_stuart_landau(benchmark::State& state) {
    auto sys = systems::stuart_landau_system({}, true);
    sys.delay = 0.01;
    const auto init = HistoryWindow::constant(std::vector<double>{1.5, 0.0}, sys.delay);
    const auto w = dde::DisturbanceSignal::constant({0.05, 0.0});
    for (auto _ : state) {
        benchmark::DoNotOptimize(dde::integrate(sys, init, w, 10.0, 1e-3));
    }
    state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_integrate_stuart_landau)->Unit(benchmark::kMillisecond);

void BM_seg_infmax_norm(benchmark::State& state) {
    const auto A = sets::stuart_landau_set(1.0);
    const auto w = HistoryWindow::from_function(
        [](double t, std::span<double> x) {
            x[0] = 1.2 + 0.3 * std::sin(4.0 * t);
            x[1] = 0.4 * std::cos(3.0 * t);
        }, 2, 0.5, 0.0, 65);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sets::seg_infmax_norm(A, w));
    }
}
BENCHMARK(BM_seg_infmax_norm);

}  // namespace
