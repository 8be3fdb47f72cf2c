#pragma once

// Fixed-step method-of-steps integrator for
//     x'(t) = f(x(t), x(t - delta), w(t))
// with classical RK4 stepping and cubic-Hermite dense output. The step is
// rounded down so that delta is an integer number of steps; delayed stage
// lookups then always read already-integrated history.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "setiss/errors.hpp"
#include "setiss/history.hpp"
#include "setiss/sets.hpp"

namespace setiss::dde {

/// Right-hand side f(t, x, x_delayed, w) -> dx.
using Rhs = std::function<void(double t, std::span<const double> x,
                               std::span<const double> x_delayed,
                               std::span<const double> w, std::span<double> dx)>;

struct DelaySystem {
    Rhs rhs;
    double delay = 0.0;
    int state_dim = 0;
    int disturbance_dim = 0;
    std::string name;
};

/// Bounded piecewise-continuous disturbance signals.
class DisturbanceSignal {
  public:
    static DisturbanceSignal zero(int dim);
    static DisturbanceSignal constant(std::vector<double> value);
    /// w(t) = amplitude for t >= t_on, zero before.
    static DisturbanceSignal step(double t_on, std::vector<double> amplitude);
    /// w_i(t) = amplitude_i * sin(2 pi freq t + phase).
    static DisturbanceSignal sinusoid(std::vector<double> amplitude, double freq, double phase);
    /// Linear interpolation of (time, value) breakpoints; constant outside.
    static DisturbanceSignal table(std::vector<double> times, std::vector<std::vector<double>> values);

    int dim() const { return dim_; }
    double sup_norm() const { return sup_norm_; }
    void eval(double t, std::span<double> out) const;
    const std::string& kind() const { return kind_; }
    /// The signal's constant value when it no longer varies after time t
    /// (zero, constant, and already-switched step signals); empty otherwise.
    std::optional<std::vector<double>> constant_after(double t) const;

  private:
    DisturbanceSignal() = default;
    int dim_ = 0;
    double sup_norm_ = 0.0;
    std::string kind_;
    std::function<void(double, std::span<double>)> fn_;
};

enum class TrajectoryStatus { Complete, Diverged, Failed };

const char* to_string(TrajectoryStatus s);

/// Dense solution record over [t0 - delta, T]. The solution segment and the
/// initial-history segment are stored as separate Hermite paths because the
/// state derivative generally jumps at t0.
class Trajectory {
  public:
    std::shared_ptr<const SampledPath> solution;       ///< [t0, T] at the record step
    std::shared_ptr<const SampledPath> initial_path;   ///< [t0 - delta, t0]; null when delta == 0
    std::vector<double> w_record;                      ///< node-major, aligned with `solution`

    double t0 = 0.0;
    double delay = 0.0;
    double step_fine = 0.0;      ///< integration step actually used
    double step_requested = 0.0;
    double record_stride = 1.0;  ///< solution->dt() / step_fine
    int state_dim = 0;
    int disturbance_dim = 0;
    std::string system_name;
    TrajectoryStatus status = TrajectoryStatus::Complete;
    std::string error;

    double t_end() const { return solution ? solution->t_end() : t0; }
    bool step_adjusted() const { return step_fine != step_requested; }

    /// View of x over [t - window, t]. Throws OutOfSpan if not recorded.
    HistoryWindow history_at(double t, double window) const;
    /// The initial history as a window ending at t0.
    HistoryWindow initial_history() const;
};

struct IntegrateOptions {
    /// Record at most this many solution nodes; the integrator keeps stepping
    /// at the fine step and stores every 2^k-th node once the cap would be
    /// exceeded.
    size_t max_record_nodes = size_t{1} << 18;
};

/// Integrate from the end of `initial_history` (its end time is t0) to T.
/// Preconditions: h > 0 (BadStep); the history spans at least [t0-delta, t0].
/// Divergence (non-finite state or |x|_inf > 1e12) stops integration and
/// returns the partial trajectory flagged Diverged.
Trajectory integrate(const DelaySystem& sys, const HistoryWindow& initial_history,
                     const DisturbanceSignal& w, double T, double h,
                     const IntegrateOptions& opts = {});

struct SimCase {
    HistoryWindow initial_history;
    DisturbanceSignal disturbance;
};

/// Independent per-case integrations; order of results matches the input.
/// Per-case failures are captured in the trajectory status, never thrown.
/// Cases run on up to `threads` workers (0 = hardware concurrency); results
/// are identical regardless of scheduling.
std::vector<Trajectory> batch_simulate(const DelaySystem& sys, std::span<const SimCase> cases,
                                       double T, double h, const IntegrateOptions& opts = {},
                                       unsigned threads = 0);

/// sup_{t >= t0} |x_t|_A over the recorded horizon, window length = the
/// trajectory's delay (degenerate point windows when delay == 0).
sets::RunningSup running_sup(const sets::TargetSet& A, const Trajectory& traj, double t0,
                             int max_windows = 2048);

/// CSV export with header `t,x1..xn,w1..wm,dist_A`; the dist_A column is
/// present when a set is supplied.
void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          const sets::TargetSet* set = nullptr);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::string& path);

}  // namespace setiss::dde
