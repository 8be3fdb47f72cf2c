#include "setiss/history.hpp"

#include <algorithm>
#include <cmath>

namespace setiss {

SampledPath::SampledPath(double t0, double dt, int dim, std::vector<double> states,
                         std::vector<double> derivs)
    : t0_(t0), dt_(dt), dim_(dim), states_(std::move(states)), derivs_(std::move(derivs)) {
    if (dim <= 0) throw Error("SampledPath: bad dimension");
    if (states_.empty() || states_.size() % static_cast<size_t>(dim) != 0 ||
        derivs_.size() != states_.size())
        throw Error("SampledPath: inconsistent buffers");
    nodes_ = states_.size() / static_cast<size_t>(dim);
    if (nodes_ > 1 && !(dt_ > 0.0)) throw Error("SampledPath: bad step");
}

std::shared_ptr<const SampledPath> SampledPath::constant(std::span<const double> x,
                                                         double t0, double t1, int nodes) {
    if (nodes < 1) nodes = 1;
    if (t1 <= t0) nodes = 1;
    const int dim = static_cast<int>(x.size());
    std::vector<double> st(static_cast<size_t>(nodes) * x.size());
    for (int i = 0; i < nodes; ++i)
        std::copy(x.begin(), x.end(), st.begin() + static_cast<size_t>(i) * x.size());
    std::vector<double> dv(st.size(), 0.0);
    const double dt = nodes > 1 ? (t1 - t0) / (nodes - 1) : 1.0;
    return std::make_shared<const SampledPath>(t0, dt, dim, std::move(st), std::move(dv));
}

std::shared_ptr<const SampledPath> SampledPath::from_function(
    const std::function<void(double, std::span<double>)>& f, int dim,
    double t0, double t1, int nodes,
    const std::function<void(double, std::span<double>)>& df) {
    if (nodes < 2) throw Error("SampledPath::from_function: need >= 2 nodes");
    const double dt = (t1 - t0) / (nodes - 1);
    std::vector<double> st(static_cast<size_t>(nodes) * static_cast<size_t>(dim));
    std::vector<double> dv(st.size());
    std::vector<double> tmp_a(static_cast<size_t>(dim)), tmp_b(static_cast<size_t>(dim));
    for (int i = 0; i < nodes; ++i) {
        const double t = t0 + dt * i;
        std::span<double> xi{&st[static_cast<size_t>(i) * static_cast<size_t>(dim)], static_cast<size_t>(dim)};
        f(t, xi);
        std::span<double> di{&dv[static_cast<size_t>(i) * static_cast<size_t>(dim)], static_cast<size_t>(dim)};
        if (df) {
            df(t, di);
        } else {
            const double h = 1e-6 * (1.0 + std::abs(t));
            f(t + h, tmp_a);
            f(t - h, tmp_b);
            for (int d = 0; d < dim; ++d) di[static_cast<size_t>(d)] = (tmp_a[static_cast<size_t>(d)] - tmp_b[static_cast<size_t>(d)]) / (2.0 * h);
        }
    }
    return std::make_shared<const SampledPath>(t0, dt, dim, std::move(st), std::move(dv));
}

size_t SampledPath::segment_of(double t) const {
    const double slack = 1e-9 * (1.0 + std::abs(dt_) * static_cast<double>(nodes_));
    if (t < t_begin() - slack || t > t_end() + slack)
        throw OutOfSpan("SampledPath: query outside recorded span");
    if (nodes_ == 1) return 0;
    auto idx = static_cast<long>(std::floor((t - t0_) / dt_));
    idx = std::clamp(idx, 0L, static_cast<long>(nodes_) - 2);
    return static_cast<size_t>(idx);
}

void SampledPath::value_at(double t, std::span<double> out) const {
    const size_t i = segment_of(t);
    if (nodes_ == 1) {
        auto x = node_state(0);
        std::copy(x.begin(), x.end(), out.begin());
        return;
    }
    const double th = (t - node_time(i)) / dt_;
    const double th2 = th * th, th3 = th2 * th;
    const double h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
    const double h10 = th3 - 2.0 * th2 + th;
    const double h01 = -2.0 * th3 + 3.0 * th2;
    const double h11 = th3 - th2;
    auto x0 = node_state(i), x1 = node_state(i + 1);
    auto f0 = node_deriv(i), f1 = node_deriv(i + 1);
    for (int d = 0; d < dim_; ++d)
        out[static_cast<size_t>(d)] = h00 * x0[static_cast<size_t>(d)] + h10 * dt_ * f0[static_cast<size_t>(d)] +
                                      h01 * x1[static_cast<size_t>(d)] + h11 * dt_ * f1[static_cast<size_t>(d)];
}

void SampledPath::deriv_at(double t, std::span<double> out) const {
    const size_t i = segment_of(t);
    if (nodes_ == 1) {
        auto f = node_deriv(0);
        std::copy(f.begin(), f.end(), out.begin());
        return;
    }
    const double th = (t - node_time(i)) / dt_;
    const double th2 = th * th;
    const double g00 = (6.0 * th2 - 6.0 * th) / dt_;
    const double g10 = 3.0 * th2 - 4.0 * th + 1.0;
    const double g01 = (-6.0 * th2 + 6.0 * th) / dt_;
    const double g11 = 3.0 * th2 - 2.0 * th;
    auto x0 = node_state(i), x1 = node_state(i + 1);
    auto f0 = node_deriv(i), f1 = node_deriv(i + 1);
    for (int d = 0; d < dim_; ++d)
        out[static_cast<size_t>(d)] = g00 * x0[static_cast<size_t>(d)] + g10 * f0[static_cast<size_t>(d)] +
                                      g01 * x1[static_cast<size_t>(d)] + g11 * f1[static_cast<size_t>(d)];
}

HistoryWindow::HistoryWindow(std::shared_ptr<const SampledPath> path, double t_lo, double t_hi)
    : right_(std::move(path)), t_lo_(t_lo), split_(t_lo), t_hi_(t_hi) {
    if (!right_) throw EmptyWindow("HistoryWindow: null path");
    if (t_hi_ < t_lo_) throw EmptyWindow("HistoryWindow: inverted span");
}

HistoryWindow::HistoryWindow(std::shared_ptr<const SampledPath> left,
                             std::shared_ptr<const SampledPath> right,
                             double t_lo, double split, double t_hi)
    : left_(std::move(left)), right_(std::move(right)), t_lo_(t_lo), split_(split), t_hi_(t_hi) {
    if (!left_ || !right_) throw EmptyWindow("HistoryWindow: null path");
    if (!(t_lo_ <= split_ && split_ <= t_hi_)) throw EmptyWindow("HistoryWindow: bad split");
}

HistoryWindow HistoryWindow::constant(std::span<const double> x, double window, double t_end) {
    return {SampledPath::constant(x, t_end - window, t_end, window > 0.0 ? 2 : 1), t_end - window, t_end};
}

HistoryWindow HistoryWindow::from_function(const std::function<void(double, std::span<double>)>& f,
                                           int dim, double window, double t_end, int nodes) {
    if (!(window > 0.0)) {
        std::vector<double> x(static_cast<size_t>(dim));
        f(t_end, x);
        return constant(x, 0.0, t_end);
    }
    return {SampledPath::from_function(f, dim, t_end - window, t_end, nodes), t_end - window, t_end};
}

int HistoryWindow::dim() const {
    if (!right_) throw EmptyWindow("HistoryWindow: empty");
    return right_->dim();
}

void HistoryWindow::value_at(double t, std::span<double> out) const {
    if (!right_) throw EmptyWindow("HistoryWindow: empty");
    const double slack = 1e-9 * (1.0 + std::abs(t_hi_ - t_lo_));
    if (t < t_lo_ - slack || t > t_hi_ + slack)
        throw OutOfSpan("HistoryWindow: query outside window");
    if (left_ && t < split_) left_->value_at(t, out);
    else right_->value_at(t, out);
}

void HistoryWindow::value_at_offset(double theta, std::span<double> out) const {
    value_at(t_hi_ + theta, out);
}

std::vector<double> HistoryWindow::sample_times(int refine) const {
    if (!right_) throw EmptyWindow("HistoryWindow: empty");
    std::vector<double> ts;
    ts.push_back(t_lo_);
    auto add_piece = [&](const SampledPath& p, double lo, double hi) {
        if (hi <= lo) return;
        const double dt = p.dt();
        if (p.nodes() == 1 || dt <= 0.0) return;
        // first node strictly inside (lo, hi]
        auto first = static_cast<long>(std::ceil((lo - p.t_begin()) / dt - 1e-12));
        for (long i = std::max(first, 0L); i < static_cast<long>(p.nodes()); ++i) {
            const double tn = p.node_time(static_cast<size_t>(i));
            if (tn >= hi - 1e-15 * (1.0 + std::abs(hi))) break;
            if (tn > lo) ts.push_back(tn);
        }
    };
    if (left_) {
        add_piece(*left_, t_lo_, split_);
        if (split_ > t_lo_ && split_ < t_hi_) ts.push_back(split_);
        add_piece(*right_, split_, t_hi_);
    } else {
        add_piece(*right_, t_lo_, t_hi_);
    }
    ts.push_back(t_hi_);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

    if (refine > 0 && ts.size() >= 2) {
        std::vector<double> fine;
        fine.reserve(ts.size() * static_cast<size_t>(refine + 1));
        for (size_t i = 0; i + 1 < ts.size(); ++i) {
            fine.push_back(ts[i]);
            for (int r = 1; r <= refine; ++r)
                fine.push_back(ts[i] + (ts[i + 1] - ts[i]) * r / (refine + 1));
        }
        fine.push_back(ts.back());
        return fine;
    }
    return ts;
}

}  // namespace setiss
