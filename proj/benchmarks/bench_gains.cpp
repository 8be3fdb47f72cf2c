#include <benchmark/benchmark.h>

#include "setiss/gains.hpp"

using setiss::gains::ComparisonFunction;
namespace gains = setiss::gains;
using CF = ComparisonFunction;

namespace {

void BM_eval_oscillator_gamma(benchmark::State& state) {
    const CF gamma = gains::oscillator_gamma(1.0);
    double s = 0.0;
    for (auto _ : state) {
        s += 1e-4;
        benchmark::DoNotOptimize(gamma(s));
    }
}
BENCHMARK(BM_eval_oscillator_gamma);

void BM_eval_c3(benchmark::State& state) {
    const CF c3 = gains::c3_gain(1.0);
    double s = 0.0;
    for (auto _ : state) {
        s += 1e-4;
        benchmark::DoNotOptimize(c3(s));
    }
}
BENCHMARK(BM_eval_c3);

void BM_invert_c3(benchmark::State& state) {
    const CF c3 = gains::c3_gain(1.0);
    double y = 0.0;
    for (auto _ : state) {
        y += 1e-3;
        benchmark::DoNotOptimize(c3.invert(y));
    }
}
BENCHMARK(BM_invert_c3);

void BM_eval_c3_inverse_node(benchmark::State& state) {
    // inverse resolved by bisection inside the tree
    const CF gamma = gains::stuart_landau_gamma(1.0, 1.0);
    double s = 0.0;
    for (auto _ : state) {
        s += 1e-4;
        benchmark::DoNotOptimize(gamma(s));
    }
}
BENCHMARK(BM_eval_c3_inverse_node);

void BM_small_gain_check(benchmark::State& state) {
    const CF f = CF::compose(gains::oscillator_gamma_theta(), CF::scaled(1e-6, CF::linear(132.0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(gains::small_gain_holds(f, 1e-3, 2.0, static_cast<int>(state.range(0))));
    }
}
BENCHMARK(BM_small_gain_check)->Arg(512)->Arg(2048);

}  // namespace
