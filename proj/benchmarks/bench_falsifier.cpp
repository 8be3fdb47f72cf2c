#include <benchmark/benchmark.h>

#include "setiss/razumikhin.hpp"
#include "setiss/systems.hpp"

using namespace setiss;

namespace {

// samples/second of the implication falsifier on the built-in bundles
void BM_falsify_oscillator(benchmark::State& state) {
    const auto bundle = systems::oscillator_bundle();
    razumikhin::FalsifyOptions opts;
    opts.n = state.range(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(razumikhin::falsify_x_premise(
            bundle.certificate, bundle.falsification_system, bundle.declared_box, opts));
    }
    state.SetItemsProcessed(state.iterations() * opts.n);
}
BENCHMARK(BM_falsify_oscillator)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_falsify_stuart_landau(benchmark::State& state) {
    const auto bundle = systems::stuart_landau_bundle();
    razumikhin::FalsifyOptions opts;
    opts.n = state.range(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(razumikhin::falsify_x_premise(
            bundle.certificate, bundle.falsification_system, bundle.declared_box, opts));
    }
    state.SetItemsProcessed(state.iterations() * opts.n);
}
BENCHMARK(BM_falsify_stuart_landau)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_delay_margin_oscillator(benchmark::State& state) {
    const auto bundle = systems::oscillator_bundle();
    for (auto _ : state) {
        benchmark::DoNotOptimize(razumikhin::delay_margin(
            bundle.gamma_theta, bundle.gamma1, bundle.certificate.alpha1,
            bundle.certificate.alpha2, bundle.margin_mu, bundle.margin_Delta, 1e-6));
    }
}
BENCHMARK(BM_delay_margin_oscillator)->Unit(benchmark::kMillisecond);

}  // namespace
