#include "setiss/dde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace setiss::dde {

namespace {
constexpr double kDivergenceGuard = 1e12;

double sup_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}
}  // namespace

const char* to_string(TrajectoryStatus s) {
    switch (s) {
        case TrajectoryStatus::Complete: return "complete";
        case TrajectoryStatus::Diverged: return "diverged";
        case TrajectoryStatus::Failed: return "failed";
    }
    return "?";
}

// --- DisturbanceSignal --------------------------------------------------------

DisturbanceSignal DisturbanceSignal::zero(int dim) {
    DisturbanceSignal s;
    s.dim_ = dim;
    s.sup_norm_ = 0.0;
    s.kind_ = "zero";
    s.fn_ = [](double, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    return s;
}

DisturbanceSignal DisturbanceSignal::constant(std::vector<double> value) {
    DisturbanceSignal s;
    s.dim_ = static_cast<int>(value.size());
    s.sup_norm_ = sup_of(value);
    s.kind_ = "constant";
    s.fn_ = [v = std::move(value)](double, std::span<double> out) {
        std::copy(v.begin(), v.end(), out.begin());
    };
    return s;
}

DisturbanceSignal DisturbanceSignal::step(double t_on, std::vector<double> amplitude) {
    DisturbanceSignal s;
    s.dim_ = static_cast<int>(amplitude.size());
    s.sup_norm_ = sup_of(amplitude);
    s.kind_ = "step";
    s.fn_ = [t_on, a = std::move(amplitude)](double t, std::span<double> out) {
        if (t >= t_on) std::copy(a.begin(), a.end(), out.begin());
        else std::fill(out.begin(), out.end(), 0.0);
    };
    return s;
}

DisturbanceSignal DisturbanceSignal::sinusoid(std::vector<double> amplitude, double freq, double phase) {
    DisturbanceSignal s;
    s.dim_ = static_cast<int>(amplitude.size());
    s.sup_norm_ = sup_of(amplitude);
    s.kind_ = "sinusoid";
    s.fn_ = [a = std::move(amplitude), freq, phase](double t, std::span<double> out) {
        const double v = std::sin(2.0 * M_PI * freq * t + phase);
        for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] * v;
    };
    return s;
}

DisturbanceSignal DisturbanceSignal::table(std::vector<double> times,
                                           std::vector<std::vector<double>> values) {
    if (times.size() != values.size() || times.empty())
        throw Error("DisturbanceSignal::table: breakpoint mismatch");
    if (!std::is_sorted(times.begin(), times.end()))
        throw Error("DisturbanceSignal::table: breakpoints must be sorted");
    DisturbanceSignal s;
    s.dim_ = static_cast<int>(values.front().size());
    // Linear interpolation is norm-convex between breakpoints, so the sup is
    // attained at a breakpoint.
    for (const auto& v : values) s.sup_norm_ = std::max(s.sup_norm_, sup_of(v));
    s.kind_ = "table";
    s.fn_ = [t = std::move(times), v = std::move(values)](double q, std::span<double> out) {
        if (q <= t.front()) { std::copy(v.front().begin(), v.front().end(), out.begin()); return; }
        if (q >= t.back()) { std::copy(v.back().begin(), v.back().end(), out.begin()); return; }
        const auto it = std::upper_bound(t.begin(), t.end(), q);
        const size_t i = static_cast<size_t>(it - t.begin()) - 1;
        const double th = (q - t[i]) / (t[i + 1] - t[i]);
        for (size_t d = 0; d < out.size(); ++d)
            out[d] = (1.0 - th) * v[i][d] + th * v[i + 1][d];
    };
    return s;
}

void DisturbanceSignal::eval(double t, std::span<double> out) const {
    if (static_cast<int>(out.size()) != dim_) throw DimensionMismatch("DisturbanceSignal: bad output span");
    fn_(t, out);
}

std::optional<std::vector<double>> DisturbanceSignal::constant_after(double t) const {
    if (kind_ == "zero") return std::vector<double>(static_cast<size_t>(dim_), 0.0);
    if (kind_ == "constant") {
        std::vector<double> v(static_cast<size_t>(dim_));
        fn_(t, v);
        return v;
    }
    if (kind_ == "step") {
        // constant once the switch is behind us
        std::vector<double> now(static_cast<size_t>(dim_)), later(static_cast<size_t>(dim_));
        fn_(t, now);
        fn_(std::numeric_limits<double>::max(), later);
        if (now == later) return now;
    }
    return std::nullopt;
}

// --- Trajectory ----------------------------------------------------------------

HistoryWindow Trajectory::history_at(double t, double window) const {
    if (!solution) throw OutOfSpan("Trajectory: no record");
    const double lo = t - window;
    const double span_lo = initial_path ? initial_path->t_begin() : solution->t_begin();
    const double slack = 1e-9 * (1.0 + std::abs(t_end()));
    if (lo < span_lo - slack || t > t_end() + slack)
        throw OutOfSpan("Trajectory::history_at: window outside recorded span");
    if (!initial_path || lo >= t0)
        return HistoryWindow(solution, std::max(lo, solution->t_begin()), std::min(t, t_end()));
    if (t <= t0)
        return HistoryWindow(initial_path, std::max(lo, span_lo), t);
    return HistoryWindow(initial_path, solution, std::max(lo, span_lo), t0, std::min(t, t_end()));
}

HistoryWindow Trajectory::initial_history() const {
    if (initial_path) return HistoryWindow(initial_path, initial_path->t_begin(), initial_path->t_end());
    if (!solution) throw OutOfSpan("Trajectory: no record");
    return HistoryWindow(solution, t0, t0);
}

// --- integrate -------------------------------------------------------------------

Trajectory integrate(const DelaySystem& sys, const HistoryWindow& initial_history,
                     const DisturbanceSignal& w, double T, double h,
                     const IntegrateOptions& opts) {
    if (!(h > 0.0)) throw BadStep("integrate: step must be positive");
    if (sys.state_dim <= 0) throw Error("integrate: system has no state");
    if (w.dim() != sys.disturbance_dim) throw DimensionMismatch("integrate: disturbance dimension mismatch");
    if (initial_history.dim() != sys.state_dim)
        throw DimensionMismatch("integrate: initial history dimension mismatch");

    const double delta = sys.delay;
    const double t0 = initial_history.t_end();
    if (!(T > t0)) throw BadStep("integrate: horizon does not extend past t0");
    if (delta > 0.0 && initial_history.window() < delta * (1.0 - 1e-12))
        throw OutOfSpan("integrate: initial history shorter than the delay");

    // Enforce delta = n_del * h by rounding h down to the nearest divisor.
    long n_del = 0;
    double h_eff = h;
    if (delta > 0.0) {
        n_del = static_cast<long>(std::ceil(delta / h - 1e-9));
        if (n_del < 1) n_del = 1;
        h_eff = delta / static_cast<double>(n_del);
    }

    long n_steps = static_cast<long>(std::ceil((T - t0) / h_eff - 1e-9));
    if (n_steps < 1) n_steps = 1;

    // Record decimation: keep every m-th fine node, m a power of two chosen so
    // the record stays under the cap. Integration still runs at h_eff.
    size_t stride = 1;
    while ((static_cast<size_t>(n_steps) / stride + 2) > std::max<size_t>(opts.max_record_nodes, 16))
        stride *= 2;
    // pad so the last step lands on a record node
    if (n_steps % static_cast<long>(stride) != 0)
        n_steps += static_cast<long>(stride) - n_steps % static_cast<long>(stride);

    const int dim = sys.state_dim;
    const int wdim = sys.disturbance_dim;
    const size_t dimz = static_cast<size_t>(dim);

    // Ring buffers of the last n_del + 1 fine nodes for delayed stage lookups.
    // Derivatives are kept two-sided: the state derivative jumps where the
    // given history hands over to the integrated solution, so the segment
    // left of a node and the segment right of it may need different values.
    size_t ring = 4;
    while (ring < static_cast<size_t>(n_del) + 2) ring *= 2;  // mask-indexable
    const size_t ring_mask = ring - 1;
    std::vector<double> ring_x(ring * dimz), ring_fl(ring * dimz), ring_fr(ring * dimz);
    auto ring_state = [&](long node) { return std::span<double>(&ring_x[(static_cast<size_t>(node) & ring_mask) * dimz], dimz); };
    auto ring_deriv_left = [&](long node) { return std::span<double>(&ring_fl[(static_cast<size_t>(node) & ring_mask) * dimz], dimz); };
    auto ring_deriv_right = [&](long node) { return std::span<double>(&ring_fr[(static_cast<size_t>(node) & ring_mask) * dimz], dimz); };

    // Seed the ring with the initial history at fine nodes -n_del..0.
    for (long i = -n_del; i <= 0; ++i) {
        const double t = t0 + h_eff * static_cast<double>(i);
        initial_history.value_at(std::max(t, initial_history.t_begin()), ring_state(i + n_del));
        // history-side derivative for interpolation inside [t0 - delta, t0]
        if (n_del > 0) {
            const double eps = 1e-6 * (1.0 + std::abs(t));
            const double ta = std::max(t - eps, initial_history.t_begin());
            const double tb = std::min(t + eps, initial_history.t_end());
            std::vector<double> xa(dimz), xb(dimz);
            initial_history.value_at(ta, xa);
            initial_history.value_at(tb, xb);
            auto dl = ring_deriv_left(i + n_del);
            auto dr = ring_deriv_right(i + n_del);
            for (size_t q = 0; q < dimz; ++q) {
                dl[q] = tb > ta ? (xb[q] - xa[q]) / (tb - ta) : 0.0;
                dr[q] = dl[q];
            }
        }
    }

    // Record buffers.
    std::vector<double> rec_x, rec_f, rec_w;
    const size_t rec_nodes_hint = static_cast<size_t>(n_steps) / stride + 2;
    rec_x.reserve(rec_nodes_hint * dimz);
    rec_f.reserve(rec_nodes_hint * dimz);
    rec_w.reserve(rec_nodes_hint * static_cast<size_t>(wdim));

    std::vector<double> x(dimz), xs(dimz), xd(dimz), k1(dimz), k2(dimz), k3(dimz), k4(dimz);
    std::vector<double> wv(static_cast<size_t>(wdim));

    {
        auto x0 = ring_state(n_del);
        std::copy(x0.begin(), x0.end(), x.begin());
    }

    // Delayed argument at time tau = t - delta, read from the ring's Hermite
    // interpolant. `base` is the fine index of the oldest ring node.
    const double* const rx = ring_x.data();
    const double* const rfl = ring_fl.data();
    const double* const rfr = ring_fr.data();
    auto delayed_at = [&](long step, double tau, std::span<double> out) {
        const long seg = step - n_del;  // stage offsets keep tau within [t_seg, t_seg + h]
        const size_t sa = (static_cast<size_t>(step) & ring_mask) * dimz;          // node seg
        const size_t sb = (static_cast<size_t>(step + 1) & ring_mask) * dimz;      // node seg + 1
        const double t_seg = t0 + h_eff * static_cast<double>(seg);
        double th = (tau - t_seg) / h_eff;
        th = th < 0.0 ? 0.0 : (th > 1.0 ? 1.0 : th);
        const double th2 = th * th, th3 = th2 * th;
        const double h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
        const double h10 = (th3 - 2.0 * th2 + th) * h_eff;
        const double h01 = -2.0 * th3 + 3.0 * th2;
        const double h11 = (th3 - th2) * h_eff;
        for (size_t q = 0; q < dimz; ++q)
            out[q] = h00 * rx[sa + q] + h10 * rfr[sa + q] + h01 * rx[sb + q] + h11 * rfl[sb + q];
    };

    // constant-tail disturbances are evaluated once, not per stage
    const auto w_const = w.constant_after(t0);
    if (w_const) std::copy(w_const->begin(), w_const->end(), wv.begin());

    auto eval_rhs = [&](long step, double t, std::span<const double> xin, std::span<double> dx) {
        if (!w_const) w.eval(t, wv);
        if (n_del == 0) {
            sys.rhs(t, xin, xin, wv, dx);
        } else {
            delayed_at(step, t - delta, xd);
            sys.rhs(t, xin, xd, wv, dx);
        }
    };

    Trajectory traj;
    traj.t0 = t0;
    traj.delay = delta;
    traj.step_fine = h_eff;
    traj.step_requested = h;
    traj.record_stride = static_cast<double>(stride);
    traj.state_dim = dim;
    traj.disturbance_dim = wdim;
    traj.system_name = sys.name;

    auto record_node = [&](double t, std::span<const double> xn, std::span<const double> fn) {
        rec_x.insert(rec_x.end(), xn.begin(), xn.end());
        rec_f.insert(rec_f.end(), fn.begin(), fn.end());
        w.eval(t, wv);
        rec_w.insert(rec_w.end(), wv.begin(), wv.end());
    };

    bool diverged = false;
    long done = 0;
    for (long n = 0; n < n_steps; ++n) {
        const double t = t0 + h_eff * static_cast<double>(n);
        // k1; also the stored derivative of node n. The seam node keeps its
        // history-side left derivative.
        eval_rhs(n, t, x, k1);
        auto rdr = ring_deriv_right(n + n_del);
        std::copy(k1.begin(), k1.end(), rdr.begin());
        if (n > 0) {
            auto rdl = ring_deriv_left(n + n_del);
            std::copy(k1.begin(), k1.end(), rdl.begin());
        }
        if (n % static_cast<long>(stride) == 0) record_node(t, x, k1);

        const double half = 0.5 * h_eff;
        for (size_t q = 0; q < dimz; ++q) xs[q] = x[q] + half * k1[q];
        eval_rhs(n, t + half, xs, k2);
        for (size_t q = 0; q < dimz; ++q) xs[q] = x[q] + half * k2[q];
        eval_rhs(n, t + half, xs, k3);
        for (size_t q = 0; q < dimz; ++q) xs[q] = x[q] + h_eff * k3[q];
        eval_rhs(n, t + h_eff, xs, k4);
        for (size_t q = 0; q < dimz; ++q)
            x[q] = x[q] + (h_eff / 6.0) * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);

        bool bad = false;
        for (double v : x)
            if (!std::isfinite(v) || std::abs(v) > kDivergenceGuard) bad = true;
        auto rn = ring_state(n + 1 + n_del);
        std::copy(x.begin(), x.end(), rn.begin());
        done = n + 1;
        if (bad) { diverged = true; break; }
    }

    // Final node (or last finite node before divergence).
    {
        const double t = t0 + h_eff * static_cast<double>(done);
        if (!diverged) {
            eval_rhs(done, t, x, k1);
            if (done % static_cast<long>(stride) == 0) record_node(t, x, k1);
        }
    }

    if (rec_x.empty()) {
        // divergence before the first record node past t0
        record_node(t0, ring_state(n_del), ring_deriv_right(n_del));
    }

    traj.solution = std::make_shared<const SampledPath>(
        t0, h_eff * static_cast<double>(stride), dim, std::move(rec_x), std::move(rec_f));
    traj.w_record = std::move(rec_w);
    traj.status = diverged ? TrajectoryStatus::Diverged : TrajectoryStatus::Complete;
    if (diverged) traj.error = "NonFiniteState: solution left the guard region";

    if (n_del > 0) {
        if (auto piece = initial_history.single_piece(); piece && piece->nodes() >= 2) {
            // reference the supplied history directly: initial windows then
            // reproduce it exactly
            traj.initial_path = piece;
        } else {
            // stitched input history: re-sample at the fine nodes
            std::vector<double> hx((static_cast<size_t>(n_del) + 1) * dimz);
            std::vector<double> hf((static_cast<size_t>(n_del) + 1) * dimz);
            for (long i = 0; i <= n_del; ++i) {
                const double t = t0 - delta + h_eff * static_cast<double>(i);
                std::span<double> dst{&hx[static_cast<size_t>(i) * dimz], dimz};
                initial_history.value_at(std::max(t, initial_history.t_begin()), dst);
                const double eps = 1e-6 * (1.0 + std::abs(t));
                const double ta = std::max(t - eps, initial_history.t_begin());
                const double tb = std::min(t + eps, initial_history.t_end());
                std::vector<double> xa(dimz), xb(dimz);
                initial_history.value_at(ta, xa);
                initial_history.value_at(tb, xb);
                std::span<double> df{&hf[static_cast<size_t>(i) * dimz], dimz};
                for (size_t q = 0; q < dimz; ++q)
                    df[q] = tb > ta ? (xb[q] - xa[q]) / (tb - ta) : 0.0;
            }
            traj.initial_path = std::make_shared<const SampledPath>(
                t0 - delta, h_eff, dim, std::move(hx), std::move(hf));
        }
    }

    return traj;
}

std::vector<Trajectory> batch_simulate(const DelaySystem& sys, std::span<const SimCase> cases,
                                       double T, double h, const IntegrateOptions& opts,
                                       unsigned threads) {
    if (cases.empty()) throw Error("batch_simulate: no cases");
    std::vector<Trajectory> out(cases.size());
    auto work = [&](size_t i) {
        try {
            out[i] = integrate(sys, cases[i].initial_history, cases[i].disturbance, T, h, opts);
        } catch (const std::exception& e) {
            Trajectory t;
            t.status = TrajectoryStatus::Failed;
            t.error = e.what();
            t.system_name = sys.name;
            out[i] = std::move(t);
        }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(cases.size()));
    if (threads <= 1) {
        for (size_t i = 0; i < cases.size(); ++i) work(i);
        return out;
    }

    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < cases.size(); i = next.fetch_add(1)) work(i);
        });
    for (auto& th : pool) th.join();
    return out;
}

sets::RunningSup running_sup(const sets::TargetSet& A, const Trajectory& traj, double t0,
                             int max_windows) {
    if (!traj.solution) throw HorizonTooShort("running_sup: no record");
    if (t0 < traj.t0 - 1e-12 || t0 > traj.t_end())
        throw HorizonTooShort("running_sup: t0 outside the recorded horizon");
    const double win = traj.initial_path ? traj.delay : 0.0;
    const double lo = std::max(t0, traj.t0);
    return sets::running_sup(A, [&](double t) { return traj.history_at(t, win); },
                             lo, traj.t_end(), max_windows);
}

// --- CSV -------------------------------------------------------------------------

void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          const sets::TargetSet* set) {
    if (!traj.solution) throw Error("write_trajectory_csv: no record");
    std::ofstream out(path);
    if (!out) throw Error("write_trajectory_csv: cannot open " + path);

    out << "t";
    for (int d = 1; d <= traj.state_dim; ++d) out << ",x" << d;
    for (int d = 1; d <= traj.disturbance_dim; ++d) out << ",w" << d;
    if (set) out << ",dist_A";
    out << "\n";

    char buf[32];
    auto emit = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };

    const auto& p = *traj.solution;
    for (size_t i = 0; i < p.nodes(); ++i) {
        emit(p.node_time(i));
        auto x = p.node_state(i);
        for (double v : x) { out << ','; emit(v); }
        for (int d = 0; d < traj.disturbance_dim; ++d) {
            out << ',';
            emit(traj.w_record[i * static_cast<size_t>(traj.disturbance_dim) + static_cast<size_t>(d)]);
        }
        if (set) { out << ','; emit(set->distance(x)); }
        out << "\n";
    }
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("read_csv: cannot open " + path);
    CsvTable tab;
    std::string line;
    if (!std::getline(in, line)) throw Error("read_csv: empty file");
    {
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) tab.header.push_back(field);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
        if (row.size() != tab.header.size()) throw Error("read_csv: ragged row");
        tab.rows.push_back(std::move(row));
    }
    return tab;
}

}  // namespace setiss::dde
