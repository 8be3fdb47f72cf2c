#pragma once

// Dense, interpolable solution records. A SampledPath stores states and
// derivatives on a uniform time grid and answers queries by cubic Hermite
// interpolation (exact on cubics). A HistoryWindow is a read-only view of up
// to two stitched paths over [t - delta, t]; the two-piece form carries the
// derivative discontinuity at the initial time of a delay integration.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "setiss/errors.hpp"

namespace setiss {

class SampledPath {
  public:
    /// nodes >= 1; states/derivs are node-major, size nodes*dim.
    SampledPath(double t0, double dt, int dim, std::vector<double> states,
                std::vector<double> derivs);

    /// Constant path (derivatives zero).
    static std::shared_ptr<const SampledPath> constant(std::span<const double> x,
                                                       double t0, double t1, int nodes = 2);
    /// Sample a function of time on [t0, t1]; derivatives by central
    /// differences unless an analytic derivative is supplied.
    static std::shared_ptr<const SampledPath> from_function(
        const std::function<void(double, std::span<double>)>& f, int dim,
        double t0, double t1, int nodes,
        const std::function<void(double, std::span<double>)>& df = nullptr);

    int dim() const { return dim_; }
    double t_begin() const { return t0_; }
    double t_end() const { return t0_ + dt_ * static_cast<double>(nodes_ - 1); }
    double dt() const { return dt_; }
    size_t nodes() const { return nodes_; }

    double node_time(size_t i) const { return t0_ + dt_ * static_cast<double>(i); }
    std::span<const double> node_state(size_t i) const { return {&states_[i * dim_], static_cast<size_t>(dim_)}; }
    std::span<const double> node_deriv(size_t i) const { return {&derivs_[i * dim_], static_cast<size_t>(dim_)}; }

    /// Throws OutOfSpan outside [t_begin, t_end]; never extrapolates.
    void value_at(double t, std::span<double> out) const;
    void deriv_at(double t, std::span<double> out) const;

  private:
    size_t segment_of(double t) const;

    double t0_, dt_;
    int dim_;
    size_t nodes_;
    std::vector<double> states_, derivs_;
};

/// View of x(t + theta), theta in [-window, 0], over one or two paths.
class HistoryWindow {
  public:
    HistoryWindow() = default;
    /// Single-piece window covering [t_lo, t_hi] of `path`.
    HistoryWindow(std::shared_ptr<const SampledPath> path, double t_lo, double t_hi);
    /// Two stitched pieces; `split` is the hand-over time. Queries at the
    /// split read the right piece.
    HistoryWindow(std::shared_ptr<const SampledPath> left,
                  std::shared_ptr<const SampledPath> right,
                  double t_lo, double split, double t_hi);

    /// Constant history at x over a window of length `window` ending at t_end.
    static HistoryWindow constant(std::span<const double> x, double window, double t_end = 0.0);
    /// History sampled from a function of time.
    static HistoryWindow from_function(const std::function<void(double, std::span<double>)>& f,
                                       int dim, double window, double t_end = 0.0, int nodes = 65);

    bool empty() const { return !right_; }
    int dim() const;
    double window() const { return t_hi_ - t_lo_; }
    double t_begin() const { return t_lo_; }
    double t_end() const { return t_hi_; }

    /// x(t_end + theta), theta in [-window, 0].
    void value_at_offset(double theta, std::span<double> out) const;
    /// x(t) for t in [t_begin, t_end].
    void value_at(double t, std::span<double> out) const;

    /// Sampling grid for sup-type norms: every path node covered by the
    /// window plus `refine` interior points per internode step, always
    /// including both window endpoints.
    std::vector<double> sample_times(int refine = 8) const;

    /// The backing path when the window is a single un-stitched piece.
    std::shared_ptr<const SampledPath> single_piece() const { return left_ ? nullptr : right_; }

  private:
    std::shared_ptr<const SampledPath> left_;   // may be null
    std::shared_ptr<const SampledPath> right_;  // primary piece
    double t_lo_ = 0.0, split_ = 0.0, t_hi_ = 0.0;
};

}  // namespace setiss
