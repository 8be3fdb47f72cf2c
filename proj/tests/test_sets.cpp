#include <doctest.h>

#include <cmath>
#include <random>

#include "setiss/sets.hpp"

using namespace setiss;
using sets::TargetSet;

namespace {

// windows built from explicit functions of time
HistoryWindow window_of(std::function<void(double, std::span<double>)> f, int dim,
                        double window, double t_end = 0.0) {
    return HistoryWindow::from_function(std::move(f), dim, window, t_end, 129);
}

std::vector<double> vec(std::initializer_list<double> v) { return {v}; }

}  // namespace

TEST_CASE("dist_point: origin and Stuart-Landau oracles") {
    const auto A0 = sets::origin_set(2);
    const double p34[] = {3.0, 4.0};
    CHECK(sets::dist_point(A0, p34) == doctest::Approx(5.0).epsilon(1e-15));

    const auto Asl = sets::stuart_landau_set(1.0);
    const double inner[] = {0.5, 0.0};
    CHECK(sets::dist_point(Asl, inner) == doctest::Approx(0.5).epsilon(1e-15));  // |z| <= 0.7 branch
    const double outer[] = {std::sqrt(2.0), 0.0};
    CHECK(sets::dist_point(Asl, outer) == doctest::Approx(1.0).epsilon(1e-12));  // sqrt(|2 - 1|)

    const double wrong_dim[] = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(sets::dist_point(A0, wrong_dim), DimensionMismatch);
}

TEST_CASE("stuart_landau set: distance vanishes on the set and jumps at the seam") {
    const auto A = sets::stuart_landau_set(1.0);
    const double on_circle[] = {std::cos(1.2), std::sin(1.2)};
    CHECK(sets::dist_point(A, on_circle) == doctest::Approx(0.0).epsilon(1e-12));
    const double at_zero[] = {0.0, 0.0};
    CHECK(sets::dist_point(A, at_zero) == 0.0);
    // the printed measure is discontinuous at |z| = 0.7
    const double just_below[] = {0.7 - 1e-9, 0.0};
    const double just_above[] = {0.7 + 1e-9, 0.0};
    CHECK(sets::dist_point(A, just_below) == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(sets::dist_point(A, just_above) == doctest::Approx(std::sqrt(1.0 - 0.49)).epsilon(1e-6));
}

TEST_CASE("origin distance is 1-Lipschitz on sampled pairs") {
    const auto A = sets::origin_set(3);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 500; ++i) {
        double x[3] = {u(rng), u(rng), u(rng)};
        double y[3] = {u(rng), u(rng), u(rng)};
        double dxy = 0.0;
        for (int d = 0; d < 3; ++d) dxy += (x[d] - y[d]) * (x[d] - y[d]);
        dxy = std::sqrt(dxy);
        CHECK(std::abs(A.distance(x) - A.distance(y)) <= dxy + 1e-9);
    }
}

TEST_CASE("membership: parametrization samples have zero distance") {
    const auto A = sets::stuart_landau_set(2.0);
    const auto& par = A.parametrization();
    std::vector<double> k(2);
    // the sqrt in the printed measure halves the exponent of fp noise, so
    // exact members sit at ~sqrt(eps) rather than eps
    for (int i = 0; i < 100; ++i) {
        par.point(par.lo + (par.hi - par.lo) * i / 100.0, k);
        CHECK(A.distance(k) <= 1e-7);
    }
    for (const auto& p : par.extra_points) CHECK(A.distance(p) <= 1e-7);
}

TEST_CASE("seg_sup_norm: pinned examples") {
    const auto A0 = sets::origin_set(2);

    // constant history at a member of A
    const auto at_zero = HistoryWindow::constant(vec({0.0, 0.0}), 1.0);
    CHECK(sets::seg_sup_norm(A0, at_zero) == 0.0);

    // x(t+s) = (s, 0) on s in [-1, 0]: max distance 1 at s = -1
    const auto drift = window_of([](double t, std::span<double> x) { x[0] = t; x[1] = 0.0; }, 2, 1.0);
    CHECK(sets::seg_sup_norm(A0, drift) == doctest::Approx(1.0).epsilon(1e-12));

    // Stuart-Landau constant window reduces to dist_point
    const auto Asl = sets::stuart_landau_set(1.0);
    const auto c = HistoryWindow::constant(vec({std::sqrt(2.0), 0.0}), 0.5);
    CHECK(sets::seg_sup_norm(Asl, c) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(sets::seg_sup_norm(A0, HistoryWindow()), EmptyWindow);
}

TEST_CASE("seg_infmax_norm: collapse, origin equality, ordering") {
    const auto A0 = sets::origin_set(2);
    const auto Asl = sets::stuart_landau_set(1.0);

    // constant window collapses to dist_point for both built-ins
    for (double r : {0.3, 0.6, 0.9, 1.7}) {
        const auto w = HistoryWindow::constant(vec({r, 0.0}), 0.4);
        CHECK(sets::seg_infmax_norm(A0, w) == doctest::Approx(r).epsilon(1e-9));
        const double expect = sets::dist_point(Asl, vec({r, 0.0}));
        CHECK(sets::seg_infmax_norm(Asl, w) == doctest::Approx(expect).epsilon(1e-7));
    }

    // for A = {0} the two norms agree exactly
    const auto wig = window_of([](double t, std::span<double> x) {
        x[0] = std::sin(3.0 * t);
        x[1] = std::cos(2.0 * t) - 1.0;
    }, 2, 1.5);
    CHECK(sets::seg_infmax_norm(A0, wig) == doctest::Approx(sets::seg_sup_norm(A0, wig)).epsilon(1e-12));

    CHECK_THROWS_AS(sets::seg_infmax_norm(sets::TargetSet(2, [](std::span<const double> x) {
                        return std::hypot(x[0], x[1]);
                    }, "no-param"), wig),
                    NoParametrization);
}

TEST_CASE("norm inequality: seg_sup <= seg_infmax on random windows, both sets") {
    const auto A0 = sets::origin_set(2);
    const auto Asl = sets::stuart_landau_set(1.0);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> amp(-2.0, 2.0), freq(0.3, 4.0), len(0.1, 2.0);
    for (int i = 0; i < 500; ++i) {
        const double a0 = amp(rng), a1 = amp(rng), b0 = amp(rng), b1 = amp(rng);
        const double f0 = freq(rng), f1 = freq(rng);
        const auto w = window_of([=](double t, std::span<double> x) {
            x[0] = a0 + b0 * std::sin(f0 * t);
            x[1] = a1 + b1 * std::cos(f1 * t);
        }, 2, len(rng));
        for (const auto* A : {&A0, &Asl}) {
            const double sup = sets::seg_sup_norm(*A, w);
            const double infmax = sets::seg_infmax_norm(*A, w);
            CHECK(sup <= infmax + 1e-8);
        }
    }
}

TEST_CASE("seg norms are monotone under window extension") {
    const auto Asl = sets::stuart_landau_set(1.0);
    auto fn = [](double t, std::span<double> x) {
        x[0] = 1.4 + 0.5 * std::sin(2.0 * t);
        x[1] = 0.3 * t;
    };
    double prev_sup = 0.0, prev_inf = 0.0;
    for (double len : {0.25, 0.5, 1.0, 2.0}) {
        const auto w = window_of(fn, 2, len);
        const double sup = sets::seg_sup_norm(Asl, w);
        const double infmax = sets::seg_infmax_norm(Asl, w);
        CHECK(sup >= prev_sup - 1e-10);
        CHECK(infmax >= prev_inf - 1e-10);
        prev_sup = sup;
        prev_inf = infmax;
    }
}

TEST_CASE("running_sup over explicit windows") {
    const auto A0 = sets::origin_set(1);

    // identically inside A
    auto zero_w = [&](double t) {
        return window_of([](double, std::span<double> x) { x[0] = 0.0; }, 1, 0.5, t);
    };
    CHECK(sets::running_sup(A0, zero_w, 0.0, 10.0).value == 0.0);

    // monotone outward drift: sup attained at the final time
    auto drift_w = [&](double t) {
        return window_of([](double q, std::span<double> x) { x[0] = q; }, 1, 0.5, t);
    };
    const auto r = sets::running_sup(A0, drift_w, 0.0, 10.0);
    CHECK(r.value == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(r.attained_at == doctest::Approx(10.0));

    // decaying oscillation: sup attained within the first window, matches a
    // dense scan of the curve
    auto decay_w = [&](double t) {
        return window_of([](double q, std::span<double> x) {
            x[0] = std::exp(-0.3 * q) * std::cos(5.0 * q);
        }, 1, 0.8, t);
    };
    const auto d = sets::running_sup(A0, decay_w, 0.0, 12.0, 4096);
    double dense = 0.0;
    for (int i = 0; i <= 200000; ++i) {
        const double q = -0.8 + (12.8) * i / 200000.0;
        dense = std::max(dense, std::abs(std::exp(-0.3 * q) * std::cos(5.0 * q)));
    }
    CHECK(d.value == doctest::Approx(dense).epsilon(1e-4));
    CHECK(d.attained_at < 1.0);
}
