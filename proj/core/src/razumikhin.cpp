#include "setiss/razumikhin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

namespace setiss::razumikhin {

using nlohmann::json;

namespace {

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double halton(uint64_t i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % static_cast<uint64_t>(base));
        i /= static_cast<uint64_t>(base);
    }
    return r;
}

}  // namespace

double RazumikhinCertificate::sandwich_dist(std::span<const double> x) const {
    return sandwich_distance ? sandwich_distance(x) : set.distance(x);
}

void RazumikhinCertificate::gradient(std::span<const double> x, std::span<double> out) const {
    if (gradV) {
        gradV(x, out);
        return;
    }
    std::vector<double> xp(x.begin(), x.end());
    const double h = 1e-6 * (1.0 + norm2(x));
    for (size_t i = 0; i < x.size(); ++i) {
        const double xi = xp[i];
        xp[i] = xi + h;
        const double vp = V(xp);
        xp[i] = xi - h;
        const double vm = V(xp);
        xp[i] = xi;
        out[i] = (vp - vm) / (2.0 * h);
    }
}

double RazumikhinCertificate::disturbance_premise(std::span<const double> w) const {
    if (disturbance_channels.empty()) return gain_w(norm2(w));
    double m = 0.0;
    for (const auto& ch : disturbance_channels) {
        const auto seg = w.subspan(static_cast<size_t>(ch.offset), static_cast<size_t>(ch.dim));
        m = std::max(m, ch.gain(norm2(seg)));
    }
    return m;
}

Sampler::Sampler(uint64_t seed, int dim) {
    if (dim <= 0 || dim > 16) throw Error("Sampler: dimension out of range");
    for (int i = 0; i < dim; ++i) bases_.push_back(kPrimes[i]);
    // leap past the correlated low indices; the seed offsets the stream
    index_ = 1009 + seed * 7919;
}

void Sampler::next(std::span<double> u) {
    for (size_t i = 0; i < bases_.size(); ++i) u[i] = halton(index_, bases_[i]);
    ++index_;
}

namespace {

// Maps a unit sample to the box; `warp` > 1 squashes magnitudes toward the
// interval midpoint-symmetric zero (for gain-capped premise channels).
double map_coord(double u, const Interval& iv, double warp) {
    if (warp != 1.0) {
        const double c = 2.0 * u - 1.0;  // [-1, 1)
        const double m = std::copysign(std::pow(std::abs(c), warp), c);
        return 0.5 * (iv.lo + iv.hi) + 0.5 * (iv.hi - iv.lo) * m;
    }
    return iv.lo + (iv.hi - iv.lo) * u;
}

struct DrawPlan {
    const SampleBox& box;
    bool tie_delayed;
    int dim_x, dim_xd, dim_w;
    int total() const { return dim_x + (tie_delayed ? 0 : dim_xd) + dim_w; }
};

void draw_point(const DrawPlan& plan, Sampler& sampler, double warp,
                std::vector<double>& u, std::vector<double>& x,
                std::vector<double>& xd, std::vector<double>& w) {
    sampler.next(u);
    int k = 0;
    for (int i = 0; i < plan.dim_x; ++i, ++k)
        x[static_cast<size_t>(i)] = map_coord(u[static_cast<size_t>(k)], plan.box.x[static_cast<size_t>(i)], 1.0);
    if (plan.tie_delayed) {
        xd = x;
    } else {
        for (int i = 0; i < plan.dim_xd; ++i, ++k)
            xd[static_cast<size_t>(i)] = map_coord(u[static_cast<size_t>(k)], plan.box.x_delayed[static_cast<size_t>(i)], 1.0);
    }
    for (int i = 0; i < plan.dim_w; ++i, ++k)
        w[static_cast<size_t>(i)] = map_coord(u[static_cast<size_t>(k)], plan.box.w[static_cast<size_t>(i)], warp);
}

enum class PremiseKind { OnValue, OnDistance };

FalsifyVerdict falsify_impl(const RazumikhinCertificate& cert, const dde::DelaySystem& sys,
                            const SampleBox& box, const FalsifyOptions& opts, PremiseKind kind) {
    if (kind == PremiseKind::OnValue && !cert.gain_v)
        throw Error("falsify_v_premise: certificate has no gain_v");
    if (kind == PremiseKind::OnDistance && !cert.gain_x)
        throw Error("falsify_x_premise: certificate has no gain_x");
    if (static_cast<int>(box.x.size()) != sys.state_dim)
        throw DimensionMismatch("falsify: state box dimension mismatch");
    if (static_cast<int>(box.w.size()) != sys.disturbance_dim)
        throw DimensionMismatch("falsify: disturbance box dimension mismatch");

    const bool tie = box.x_delayed.empty();
    if (!tie && static_cast<int>(box.x_delayed.size()) != sys.state_dim)
        throw DimensionMismatch("falsify: delayed box dimension mismatch");

    DrawPlan plan{box, tie, sys.state_dim, sys.state_dim, sys.disturbance_dim};
    Sampler sampler(opts.seed, plan.total());

    const size_t nd = static_cast<size_t>(sys.state_dim);
    std::vector<double> u(static_cast<size_t>(plan.total()));
    std::vector<double> x(nd), xd(nd), w(static_cast<size_t>(sys.disturbance_dim));
    std::vector<double> grad(nd), dx(nd);

    FalsifyVerdict verdict;
    verdict.samples = opts.n;

    const ComparisonFunction& hist_gain = kind == PremiseKind::OnValue ? *cert.gain_v : *cert.gain_x;

    for (long i = 0; i < opts.n; ++i) {
        draw_point(plan, sampler, opts.disturbance_warp, u, x, xd, w);

        double lhs, hist;
        if (kind == PremiseKind::OnValue) {
            lhs = cert.V(x);
            hist = std::max(lhs, cert.V(xd));
        } else {
            lhs = cert.set.distance(x);
            hist = std::max(lhs, cert.set.distance(xd));
        }
        const double rhs = std::max(hist_gain(hist), cert.disturbance_premise(w));
        if (lhs < rhs * (1.0 + opts.premise_margin)) continue;
        ++verdict.premise_hits;

        const double dist = kind == PremiseKind::OnValue ? cert.set.distance(x) : lhs;
        cert.gradient(x, grad);
        sys.rhs(0.0, x, xd, w, dx);
        double dv = 0.0;
        for (size_t q = 0; q < nd; ++q) dv += grad[q] * dx[q];

        const double decay = cert.alpha3(dist);
        const double slack = opts.slack ? *opts.slack : 1e-7 * (1.0 + std::abs(decay));
        if (dv <= -decay + slack) continue;

        Counterexample cex;
        cex.sample_index = i;
        cex.x = x;
        cex.x_delayed = xd;
        cex.w = w;
        cex.premise_lhs = lhs;
        cex.premise_rhs = rhs;
        cex.observed = dv;
        cex.required = -decay + slack;
        cex.what = "implication violated: dV/dt exceeds -alpha3(|x|_A) + slack at a premise point";
        verdict.counterexample = std::move(cex);
        verdict.status = FalsifyStatus::CounterexampleFound;
        verdict.samples = i + 1;
        return verdict;
    }

    verdict.status = verdict.premise_hits > 0 ? FalsifyStatus::Pass : FalsifyStatus::Vacuous;
    return verdict;
}

}  // namespace

FalsifyVerdict check_sandwich(const RazumikhinCertificate& cert, const SampleBox& box, long n,
                              uint64_t seed) {
    if (n < 1) throw Error("check_sandwich: n must be >= 1");
    const int dim = static_cast<int>(box.x.size());
    Sampler sampler(seed, dim);
    std::vector<double> u(static_cast<size_t>(dim)), x(static_cast<size_t>(dim));

    FalsifyVerdict verdict;
    verdict.samples = n;
    for (long i = 0; i < n; ++i) {
        sampler.next(u);
        for (int d = 0; d < dim; ++d)
            x[static_cast<size_t>(d)] = map_coord(u[static_cast<size_t>(d)], box.x[static_cast<size_t>(d)], 1.0);
        const double dist = cert.sandwich_dist(x);
        const double v = cert.V(x);
        const double slack = 1e-9 * (1.0 + std::abs(v));
        const double lo = cert.alpha1(dist), hi = cert.alpha2(dist);
        ++verdict.premise_hits;
        if (v >= lo - slack && v <= hi + slack) continue;
        Counterexample cex;
        cex.sample_index = i;
        cex.x = x;
        cex.premise_lhs = dist;
        cex.observed = v;
        cex.required = v < lo - slack ? lo : hi;
        cex.what = v < lo - slack ? "sandwich violated: V(x) < alpha1(|x|_A)"
                                  : "sandwich violated: V(x) > alpha2(|x|_A)";
        verdict.counterexample = std::move(cex);
        verdict.status = FalsifyStatus::CounterexampleFound;
        verdict.samples = i + 1;
        return verdict;
    }
    verdict.status = FalsifyStatus::Pass;
    return verdict;
}

FalsifyVerdict falsify_v_premise(const RazumikhinCertificate& cert, const dde::DelaySystem& sys,
                                 const SampleBox& box, const FalsifyOptions& opts) {
    return falsify_impl(cert, sys, box, opts, PremiseKind::OnValue);
}

FalsifyVerdict falsify_x_premise(const RazumikhinCertificate& cert, const dde::DelaySystem& sys,
                                 const SampleBox& box, const FalsifyOptions& opts) {
    return falsify_impl(cert, sys, box, opts, PremiseKind::OnDistance);
}

const char* to_string(MarginStatus s) {
    switch (s) {
        case MarginStatus::Converged: return "converged";
        case MarginStatus::IntervalEmpty: return "interval_empty";
        case MarginStatus::NoMargin: return "no_margin";
        case MarginStatus::Unbounded: return "unbounded";
    }
    return "?";
}

MarginReport delay_margin(const ComparisonFunction& gamma_theta, const ComparisonFunction& gamma1,
                          const ComparisonFunction& alpha1, const ComparisonFunction& alpha2,
                          double mu, double Delta, double tol, int grid_size) {
    MarginReport rep;
    rep.mu = mu;
    rep.Delta = Delta;
    if (!(mu >= 0.0) || !(mu < Delta)) {
        rep.status = MarginStatus::IntervalEmpty;
        return rep;
    }

    const ComparisonFunction wrap = ComparisonFunction::compose(
        ComparisonFunction::inverse_of(alpha1), alpha2);

    auto loop_gain = [&](double delta) {
        return ComparisonFunction::compose(
            wrap, ComparisonFunction::compose(gamma_theta,
                                              ComparisonFunction::scaled(delta, gamma1)));
    };
    auto condition = [&](double delta, gains::SmallGainReport* out = nullptr) {
        const auto r = gains::small_gain_holds(loop_gain(delta), mu, Delta, grid_size);
        if (out) *out = r;
        return r.holds;
    };

    constexpr double kDeltaCap = 1e6;
    // Margins below this are indistinguishable from zero at the sampling
    // resolution of the small-gain grid; they flag an inconsistent gain set.
    const double delta_floor = Delta * 1e-8;

    double lo = 0.0, hi = 1.0;
    int iters = 0;
    if (condition(hi)) {
        while (condition(hi)) {
            lo = hi;
            hi *= 2.0;
            ++iters;
            if (hi >= kDeltaCap) {
                if (condition(kDeltaCap)) {
                    rep.status = MarginStatus::Unbounded;
                    rep.delta_star = std::numeric_limits<double>::infinity();
                    rep.iterations = iters;
                    return rep;
                }
                hi = kDeltaCap;
                break;
            }
        }
    } else {
        // walk down geometrically until the condition first holds
        double probe = hi / 8.0;
        while (!condition(probe)) {
            hi = probe;
            probe /= 8.0;
            ++iters;
            if (probe < delta_floor) {
                rep.status = MarginStatus::NoMargin;
                rep.iterations = iters;
                return rep;
            }
        }
        lo = probe;
    }

    // condition(lo) holds, condition(hi) fails
    for (; iters < 400; ++iters) {
        const double mid = 0.5 * (lo + hi);
        const double width_goal = std::min(tol * std::max(1.0, mid), 5e-7 * mid);
        if (hi - lo <= width_goal) break;
        if (condition(mid)) lo = mid; else hi = mid;
    }

    rep.delta_star = 0.5 * (lo + hi);
    rep.iterations = iters;
    if (rep.delta_star < delta_floor) {
        rep.status = MarginStatus::NoMargin;
        return rep;
    }

    gains::SmallGainReport at_low;
    const bool ok_low = condition(rep.delta_star * (1.0 - 1e-6), &at_low);
    const bool fail_high = !condition(rep.delta_star * (1.0 + 1e-6));
    rep.worst_s = at_low.worst_point;
    rep.status = (ok_low && fail_high) ? MarginStatus::Converged : MarginStatus::NoMargin;
    return rep;
}

AttenuationProfile construct_attenuation(const ComparisonFunction& psi, double flat_radius) {
    if (!(flat_radius > 0.0)) throw Error("construct_attenuation: flat_radius must be positive");
    {
        const auto tag = psi.class_tag() == gains::FnClass::Unverified ? gains::verify_class(psi, 1024)
                                                                       : psi.class_tag();
        if (tag != gains::FnClass::K && tag != gains::FnClass::KInf)
            throw NotStrictlyIncreasing("construct_attenuation: psi must be class K-infinity");
    }

    // s0: where the bound min{1/(0.5+psi), 1} departs from 1, i.e. psi(s0) = 0.5.
    double s0;
    try {
        s0 = psi.invert(0.5);
    } catch (const OutOfRange&) {
        s0 = std::numeric_limits<double>::infinity();  // psi stays below 0.5: b == 1 works
    }

    AttenuationProfile prof;
    prof.radius_shrunk = flat_radius > 0.5 * s0;
    prof.r0 = std::min(flat_radius, 0.5 * s0);

    if (!std::isfinite(s0)) {
        prof.b = ComparisonFunction::custom("attenuation(b=1)", [](double) { return 1.0; });
        prof.r0 = flat_radius;
        prof.transition_end = flat_radius;
        prof.radius_shrunk = false;
        return prof;
    }

    const double r0 = prof.r0;
    const double r1 = 0.5 * (r0 + s0);  // transition ends strictly below s0
    prof.transition_end = r1;
    // c <= 1 chosen so c/(0.5+psi(s)) <= 1 for every s >= r0
    const double c = std::min(1.0, 0.5 + psi(r0));

    auto smoothstep = [](double t) {
        // C-infinity switch: 0 for t<=0, 1 for t>=1
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        const double a = std::exp(-1.0 / t);
        const double b = std::exp(-1.0 / (1.0 - t));
        return a / (a + b);
    };

    auto psi_fn = psi;  // capture by value; trees are immutable and shareable
    prof.b = ComparisonFunction::custom(
        "attenuation",
        [psi_fn, r0, r1, c, smoothstep](double s) {
            if (s <= r0) return 1.0;
            const double target = c / (0.5 + psi_fn(s));
            const double w = smoothstep((s - r0) / (r1 - r0));
            return 1.0 + w * (target - 1.0);
        });
    return prof;
}

ComparisonFunction secondary_input_gain(const ComparisonFunction& alpha3, double L) {
    if (L < 1.0) throw BadL("secondary_input_gain: requires L >= 1");
    return ComparisonFunction::max_of(
        ComparisonFunction::identity(),
        ComparisonFunction::compose(ComparisonFunction::inverse_of(alpha3),
                                    ComparisonFunction::linear(2.0 * (1.0 + L))));
}

AdditivePerturbationGains additive_perturbation_gains(const ComparisonFunction& alpha2,
                                                      const ComparisonFunction& alpha3,
                                                      const ComparisonFunction& gamma,
                                                      const ComparisonFunction& k) {
    using CF = ComparisonFunction;
    AdditivePerturbationGains out;
    out.alpha4 = CF::compose(alpha3, CF::scaled(0.5, CF::inverse_of(alpha2)));
    out.alpha5 = CF::compose(out.alpha4, alpha2);
    const CF alpha4_inv = CF::inverse_of(out.alpha4);
    if (k.is_zero()) {
        out.gamma_v = CF();  // no delayed perturbation: gamma_v vanishes
    } else {
        out.gamma_v = CF::compose(alpha4_inv,
                                  CF::scaled(2.0, CF::compose(gamma, CF::scaled(4.0, k))));
    }
    out.gamma_u = CF::compose(alpha4_inv, CF::scaled(2.0, CF::scale_arg(gamma, 4.0)));
    out.small_gain = gains::small_gain_holds(out.gamma_v, 0.0, 1.0, 512);
    return out;
}

ComparisonFunction effective_delayed_gain(const ComparisonFunction& gamma_theta,
                                          const ComparisonFunction& gamma2,
                                          const ComparisonFunction& gamma, double delta) {
    using CF = ComparisonFunction;
    return CF::max_of(CF::compose(gamma_theta, CF::scaled(delta, gamma2)), gamma);
}

namespace {

// t -> |x_t|_A sampled on [t_lo, t_hi]; windows use the trajectory's delay.
std::vector<std::pair<double, double>> sample_set_norm(const dde::Trajectory& traj,
                                                       const sets::TargetSet& set,
                                                       double t_lo, double t_hi, int n) {
    const double win = traj.initial_path ? traj.delay : 0.0;
    const bool have_param = set.has_parametrization();
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = n > 1 ? t_lo + (t_hi - t_lo) * i / (n - 1) : t_lo;
        const auto w = traj.history_at(t, std::min(win, t - (traj.t0 - win)));
        const double v = have_param ? sets::seg_infmax_norm(set, w) : sets::seg_sup_norm(set, w);
        out.emplace_back(t, v);
    }
    return out;
}

// Dense pointwise-distance max over record nodes in [t_lo, t_hi]; a cheap
// refinement of the window-sampled sup (for metric sets they agree in the
// dense limit).
double dense_point_sup(const dde::Trajectory& traj, const sets::TargetSet& set, double t_lo,
                       double t_hi) {
    double m = 0.0;
    const auto& p = *traj.solution;
    for (size_t i = 0; i < p.nodes(); ++i) {
        const double t = p.node_time(i);
        if (t < t_lo || t > t_hi) continue;
        m = std::max(m, set.distance(p.node_state(i)));
    }
    return m;
}

}  // namespace

IssVerdict iss_monitor(const dde::Trajectory& traj, const sets::TargetSet& set,
                       const ComparisonFunction& gain, double w_sup, double mu,
                       const MonitorOptions& opts) {
    if (!traj.solution) throw HorizonTooShort("iss_monitor: no record");

    IssVerdict verdict;
    verdict.predicted_bound = std::max(gain(w_sup), mu);
    const double bound = verdict.predicted_bound * (1.0 + opts.slack) + opts.floor;

    if (traj.status != dde::TrajectoryStatus::Complete) {
        verdict.pass = false;
        verdict.note = std::string("trajectory not complete: ") + traj.error;
        verdict.ultimate_bound_observed = std::numeric_limits<double>::infinity();
        return verdict;
    }

    const double T = traj.t_end();
    const double span = T - traj.t0;
    const double t_tail = traj.t0 + span * opts.transient_fraction;
    const double min_tail = traj.delay > 0.0 ? 10.0 * traj.delay
                                             : 10.0 * traj.solution->dt();
    if (T - t_tail < min_tail)
        throw HorizonTooShort("iss_monitor: tail shorter than 10 delay windows");

    // Tail sup of |x_t|_A: sampled windows plus the dense node-distance max.
    const auto tail = sample_set_norm(traj, set, t_tail, T, std::max(16, opts.max_windows / 4));
    double tail_sup = dense_point_sup(traj, set, t_tail, T);
    for (const auto& [t, v] : tail) tail_sup = std::max(tail_sup, v);
    verdict.ultimate_bound_observed = tail_sup;

    // Envelope over the whole run, and the transient time against the bound.
    const auto full = sample_set_norm(traj, set, traj.t0, T, opts.max_windows);
    verdict.envelope.samples.resize(full.size());
    double running = 0.0;
    for (size_t i = full.size(); i-- > 0;) {
        running = std::max(running, full[i].second);
        verdict.envelope.samples[i] = {full[i].first - traj.t0, running};
    }
    verdict.envelope.anchor = verdict.envelope.samples.empty() ? 0.0 : verdict.envelope.samples.front().second;

    verdict.transient_time = T;
    for (const auto& [t, v] : full) {
        if (v <= bound) {
            verdict.transient_time = t;
            break;
        }
    }

    verdict.pass = tail_sup <= bound;
    return verdict;
}

KLEnvelope empirical_envelope(const dde::Trajectory& traj, const sets::TargetSet& set, int samples) {
    if (!traj.solution) throw HorizonTooShort("empirical_envelope: no record");
    const auto full = sample_set_norm(traj, set, traj.t0, traj.t_end(), std::max(2, samples));
    KLEnvelope env;
    env.samples.resize(full.size());
    double running = 0.0;
    for (size_t i = full.size(); i-- > 0;) {
        running = std::max(running, full[i].second);
        env.samples[i] = {full[i].first - traj.t0, running};
    }
    env.anchor = env.samples.empty() ? 0.0 : env.samples.front().second;
    return env;
}

// --- JSON ---------------------------------------------------------------------

json FalsifyVerdict::to_json() const {
    json j;
    j["schema"] = 1;
    j["status"] = status == FalsifyStatus::Pass ? "pass"
                  : status == FalsifyStatus::CounterexampleFound ? "counterexample"
                                                                 : "vacuous";
    j["premise_hits"] = premise_hits;
    j["samples"] = samples;
    if (counterexample) {
        const auto& c = *counterexample;
        j["counterexample"] = {
            {"sample_index", c.sample_index}, {"x", c.x}, {"x_delayed", c.x_delayed},
            {"w", c.w}, {"premise_lhs", c.premise_lhs}, {"premise_rhs", c.premise_rhs},
            {"observed", c.observed}, {"required", c.required}, {"what", c.what},
        };
    } else {
        j["counterexample"] = nullptr;
    }
    return j;
}

json MarginReport::to_json() const {
    json j;
    j["schema"] = 1;
    j["delta_star"] = std::isfinite(delta_star) ? json(delta_star) : json("inf");
    j["mu"] = mu;
    j["Delta"] = Delta;
    j["worst_s"] = worst_s;
    j["iterations"] = iterations;
    j["status"] = to_string(status);
    return j;
}

json IssVerdict::to_json() const {
    json j;
    j["schema"] = 1;
    j["pass"] = pass;
    j["ultimate_bound_observed"] = ultimate_bound_observed;
    j["predicted_bound"] = predicted_bound;
    j["transient_time"] = transient_time;
    j["envelope_anchor"] = envelope.anchor;
    if (!note.empty()) j["note"] = note;
    return j;
}

}  // namespace setiss::razumikhin
