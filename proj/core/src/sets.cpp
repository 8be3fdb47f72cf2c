#include "setiss/sets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace setiss::sets {

namespace {

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double dist_to(std::span<const double> k, std::span<const double> x) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double d = k[i] - x[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

TargetSet::TargetSet(int dim, std::function<double(std::span<const double>)> distance,
                     std::string description, std::optional<Parametrization> param,
                     double membership_tol)
    : dim_(dim), distance_(std::move(distance)), description_(std::move(description)),
      param_(std::move(param)), membership_tol_(membership_tol) {
    if (dim_ <= 0) throw DimensionMismatch("TargetSet: bad ambient dimension");
    if (param_ && param_->param_dim != 0 && param_->param_dim != 1)
        throw Error("TargetSet: only 0- and 1-d parametrizations are supported");
}

const Parametrization& TargetSet::parametrization() const {
    if (!param_) throw NoParametrization("TargetSet: no parametrization");
    return *param_;
}

double TargetSet::distance(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim_)
        throw DimensionMismatch("TargetSet: state dimension mismatch");
    return distance_(x);
}

TargetSet origin_set(int dim) {
    Parametrization p;
    p.param_dim = 0;
    p.extra_points.push_back(std::vector<double>(static_cast<size_t>(dim), 0.0));
    return TargetSet(dim, [](std::span<const double> x) { return norm2(x); },
                     "origin", std::move(p));
}

TargetSet stuart_landau_set(double alpha) {
    if (!(alpha > 0.0)) throw Error("stuart_landau_set: alpha must be positive");
    const double ra = std::sqrt(alpha);
    Parametrization p;
    p.param_dim = 1;
    p.lo = 0.0;
    p.hi = 2.0 * M_PI;
    p.periodic = true;
    p.point = [ra](double t, std::span<double> out) {
        out[0] = ra * std::cos(t);
        out[1] = ra * std::sin(t);
    };
    p.extra_points.push_back({0.0, 0.0});
    auto dist = [alpha, ra](std::span<const double> z) {
        const double r = std::hypot(z[0], z[1]);
        if (r <= 0.7 * ra) return r;
        return std::sqrt(std::abs(r * r - alpha));
    };
    return TargetSet(2, dist, "stuart_landau", std::move(p));
}

double dist_point(const TargetSet& A, std::span<const double> x) { return A.distance(x); }

double seg_sup_norm(const TargetSet& A, const HistoryWindow& h) {
    if (h.empty()) throw EmptyWindow("seg_sup_norm: empty window");
    std::vector<double> x(static_cast<size_t>(h.dim()));
    double best = 0.0;
    for (double t : h.sample_times()) {
        h.value_at(t, x);
        best = std::max(best, A.distance(x));
    }
    return best;
}

namespace {

// max over the window samples of |k - x(s)|.
double window_max_dist(std::span<const double> k,
                       const std::vector<std::vector<double>>& samples) {
    double m = 0.0;
    for (const auto& x : samples) m = std::max(m, dist_to(k, x));
    return m;
}

}  // namespace

double seg_infmax_norm(const TargetSet& A, const HistoryWindow& h) {
    if (h.empty()) throw EmptyWindow("seg_infmax_norm: empty window");
    const auto& par = A.parametrization();  // throws NoParametrization

    // Materialize the window samples once.
    std::vector<std::vector<double>> samples;
    {
        std::vector<double> x(static_cast<size_t>(h.dim()));
        for (double t : h.sample_times()) {
            h.value_at(t, x);
            samples.push_back(x);
        }
    }
    if (samples.empty()) throw EmptyWindow("seg_infmax_norm: no samples");

    double best = std::numeric_limits<double>::infinity();
    std::vector<double> k(static_cast<size_t>(A.dim()));

    for (const auto& pt : par.extra_points)
        best = std::min(best, window_max_dist(pt, samples));

    if (par.param_dim == 1) {
        auto objective = [&](double t) {
            par.point(t, k);
            return window_max_dist(k, samples);
        };
        // Coarse scan, then golden-section refinement around the best cell.
        constexpr int kCoarse = 64;
        const double span = par.hi - par.lo;
        double best_t = par.lo;
        double best_v = std::numeric_limits<double>::infinity();
        const int denom = par.periodic ? kCoarse : kCoarse - 1;
        for (int i = 0; i < kCoarse; ++i) {
            const double t = par.lo + span * i / denom;
            const double v = objective(t);
            if (v < best_v) { best_v = v; best_t = t; }
        }
        const double cell = span / denom;
        double a = best_t - cell, b = best_t + cell;
        if (!par.periodic) {
            a = std::max(a, par.lo);
            b = std::min(b, par.hi);
        }
        constexpr double kGolden = 0.6180339887498949;
        double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
        double f1 = objective(x1), f2 = objective(x2);
        while (b - a > 1e-8) {
            if (f1 < f2) {
                b = x2; x2 = x1; f2 = f1;
                x1 = b - kGolden * (b - a);
                f1 = objective(x1);
            } else {
                a = x1; x1 = x2; f1 = f2;
                x2 = a + kGolden * (b - a);
                f2 = objective(x2);
            }
        }
        best = std::min({best, best_v, std::min(f1, f2)});
    }

    if (!std::isfinite(best)) throw NoParametrization("seg_infmax_norm: parametrization has no members");

    // Anchored-distance floor: keeps the norm ordering ||x_t||_A <= |x_t|_A
    // valid for oracle measures that exceed the Euclidean set distance.
    return std::max(best, seg_sup_norm(A, h));
}

RunningSup running_sup(const TargetSet& A,
                       const std::function<HistoryWindow(double)>& window_at,
                       double t0, double t_end, int max_windows) {
    if (!(t_end >= t0)) throw HorizonTooShort("running_sup: horizon ends before t0");
    const int n = std::max(2, max_windows);
    RunningSup out;
    const bool have_param = A.has_parametrization();
    out.lower_bound_only = !have_param;
    for (int i = 0; i < n; ++i) {
        const double t = t0 + (t_end - t0) * i / (n - 1);
        const HistoryWindow w = window_at(t);
        const double v = have_param ? seg_infmax_norm(A, w) : seg_sup_norm(A, w);
        if (v > out.value) {
            out.value = v;
            out.attained_at = t;
        }
    }
    return out;
}

}  // namespace setiss::sets
