#pragma once

// Razumikhin-style certificate checking: sampled sandwich and implication
// falsification, the small-gain delay-margin solver, input-scaling and gain
// constructions for delayed perturbations, and the ISS trajectory monitor.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "setiss/dde.hpp"
#include "setiss/gains.hpp"
#include "setiss/sets.hpp"

namespace setiss::razumikhin {

using gains::ComparisonFunction;
using gains::KLEnvelope;

/// One disturbance block with its own premise gain: the premise term is
/// gain(|w[offset .. offset+dim)|).
struct DisturbanceChannel {
    int offset = 0;
    int dim = 0;
    ComparisonFunction gain;
    std::string name;
};

/// V, its bounds and gains. Either gain_v (premise on Lyapunov values) or
/// gain_x (premise on set distances) must be present, matching the falsifier
/// used. When `disturbance_channels` is empty the single gain_w acts on the
/// full disturbance vector norm.
struct RazumikhinCertificate {
    std::function<double(std::span<const double>)> V;
    /// optional; central finite differences with step 1e-6*(1+|x|) otherwise
    std::function<void(std::span<const double>, std::span<double>)> gradV;
    ComparisonFunction alpha1, alpha2, alpha3;
    std::optional<ComparisonFunction> gain_v;
    std::optional<ComparisonFunction> gain_x;
    ComparisonFunction gain_w;
    std::vector<DisturbanceChannel> disturbance_channels;
    sets::TargetSet set = sets::origin_set(1);
    /// Distance the sandwich bounds are stated against; defaults to the set's
    /// own oracle. The Stuart-Landau bundle overrides this with the plain
    /// circle distance, whose quartic is exactly V.
    std::function<double(std::span<const double>)> sandwich_distance;

    double sandwich_dist(std::span<const double> x) const;
    void gradient(std::span<const double> x, std::span<double> out) const;
    /// max over channels (or gain_w) of the premise term for disturbance w.
    double disturbance_premise(std::span<const double> w) const;
};

struct Interval {
    double lo = 0.0, hi = 0.0;
};

/// Sampling boxes for the falsifiers. When `x_delayed` is empty and the system
/// has no delay, the delayed argument is tied to the state sample.
struct SampleBox {
    std::vector<Interval> x;
    std::vector<Interval> x_delayed;
    std::vector<Interval> w;
};

/// Deterministic low-discrepancy point set (seeded Halton).
class Sampler {
  public:
    Sampler(uint64_t seed, int dim);
    /// Next point in [0,1)^dim.
    void next(std::span<double> u);

  private:
    std::vector<int> bases_;
    uint64_t index_;
};

struct Counterexample {
    long sample_index = -1;
    std::vector<double> x, x_delayed, w;
    double premise_lhs = 0.0;   ///< left side of the implication premise
    double premise_rhs = 0.0;   ///< gain bound it had to exceed
    double observed = 0.0;      ///< V <-> dV/dt or V(x) for the sandwich
    double required = 0.0;      ///< bound that was violated
    std::string what;
};

enum class FalsifyStatus { Pass, CounterexampleFound, Vacuous };

struct FalsifyVerdict {
    FalsifyStatus status = FalsifyStatus::Vacuous;
    long premise_hits = 0;
    long samples = 0;
    std::optional<Counterexample> counterexample;

    bool passed() const { return status == FalsifyStatus::Pass; }
    nlohmann::json to_json() const;
};

struct FalsifyOptions {
    long n = 100000;
    uint64_t seed = 0;
    /// premise inset: a sample counts as a premise hit only when
    /// lhs >= rhs * (1 + premise_margin)
    double premise_margin = 1e-9;
    /// decay slack; defaults to 1e-7 * (1 + alpha3(|x|_A)) when unset
    std::optional<double> slack;
    /// disturbance (and delayed-state) magnitudes are warped toward zero with
    /// u -> u^warp so the gain-capped premise region is sampled densely;
    /// 1 = plain uniform
    double disturbance_warp = 3.0;
};

/// Sandwich check: alpha1(|x|_A) <= V(x) <= alpha2(|x|_A) on n sampled states,
/// slack 1e-9 * (1 + V(x)). A counterexample is a result, not an error.
FalsifyVerdict check_sandwich(const RazumikhinCertificate& cert, const SampleBox& box, long n,
                              uint64_t seed = 0);

/// Premise on Lyapunov values:
///   V(x) >= max{gain_v(max{V(x), V(x_d)}), gain_w(|w|)}
///     ==>  gradV(x) . f(x, x_d, w) <= -alpha3(|x|_A) + slack.
/// Returns the first violator by sample index, a pass with the premise-hit
/// count, or a vacuous verdict when no sample satisfied the premise.
FalsifyVerdict falsify_v_premise(const RazumikhinCertificate& cert, const dde::DelaySystem& sys,
                                 const SampleBox& box, const FalsifyOptions& opts = {});

/// Premise on set distances:
///   |x|_A >= max{gain_x(max{|x|_A, |x_d|_A}), channel gains on w}
///     ==>  gradV(x) . f(x, x_d, w) <= -alpha3(|x|_A) + slack.
FalsifyVerdict falsify_x_premise(const RazumikhinCertificate& cert, const dde::DelaySystem& sys,
                                 const SampleBox& box, const FalsifyOptions& opts = {});

enum class MarginStatus { Converged, IntervalEmpty, NoMargin, Unbounded };

const char* to_string(MarginStatus s);

struct MarginReport {
    double delta_star = 0.0;
    double mu = 0.0;
    double Delta = 0.0;
    double worst_s = 0.0;  ///< margin minimizer at the converged delay
    int iterations = 0;
    MarginStatus status = MarginStatus::IntervalEmpty;

    nlohmann::json to_json() const;
};

/// Largest delay for which  alpha1^{-1} o alpha2 o gamma_theta(delta *
/// gamma1(s)) < s  holds on (mu, Delta), located by bisection with geometric
/// upper-bracket expansion (capped at 1e6 -> Unbounded). Converged reports
/// satisfy: the condition holds at delta_star*(1 - 1e-6) and fails at
/// delta_star*(1 + 1e-6).
MarginReport delay_margin(const ComparisonFunction& gamma_theta, const ComparisonFunction& gamma1,
                          const ComparisonFunction& alpha1, const ComparisonFunction& alpha2,
                          double mu, double Delta, double tol = 1e-6, int grid_size = 2048);

struct AttenuationProfile {
    ComparisonFunction b;   ///< smooth, b == 1 on [0, r0], 0 < b <= min{1/(0.5+psi), 1}
    double r0 = 0.0;
    double transition_end = 0.0;
    bool radius_shrunk = false;  ///< set when psi(flat_radius) > 0.5 forced r0 down
};

/// Smooth input-scaling profile b with b = 1 near the origin and
/// b(s) * (0.5 + psi(s)) <= 1 everywhere. psi must be class K-infinity.
AttenuationProfile construct_attenuation(const ComparisonFunction& psi, double flat_radius);

/// Gain for the secondary input channel: max{s, alpha3^{-1}(2 (1+L) s)}.
/// Requires L >= 1 (BadL).
ComparisonFunction secondary_input_gain(const ComparisonFunction& alpha3, double L);

struct AdditivePerturbationGains {
    ComparisonFunction gamma_v, gamma_u;
    ComparisonFunction alpha4, alpha5;
    gains::SmallGainReport small_gain;  ///< gamma_v(s) < s probe on (0, 1); applicability flag
};

/// Gains for an additive delayed perturbation bounded by k(|V_t|):
///   alpha4(s) = alpha3(0.5 alpha2^{-1}(s)),   alpha5(s) = alpha4(alpha2(s)),
///   gamma_v(s) = alpha4^{-1}(2 gamma(4 k(s))), gamma_u(s) = alpha4^{-1}(2 gamma(4 s)).
AdditivePerturbationGains additive_perturbation_gains(const ComparisonFunction& alpha2,
                                                      const ComparisonFunction& alpha3,
                                                      const ComparisonFunction& gamma,
                                                      const ComparisonFunction& k);

/// Effective disturbance gain of the delayed loop,
/// max{gamma_theta(delta * gamma2(s)), gamma(s)}.
ComparisonFunction effective_delayed_gain(const ComparisonFunction& gamma_theta,
                                          const ComparisonFunction& gamma2,
                                          const ComparisonFunction& gamma, double delta);

struct IssVerdict {
    double ultimate_bound_observed = 0.0;
    double predicted_bound = 0.0;  ///< max{gain(w_sup), mu}
    double transient_time = 0.0;   ///< first sampled t with |x_t|_A within the bound
    KLEnvelope envelope;
    bool pass = false;
    std::string note;

    nlohmann::json to_json() const;
};

struct MonitorOptions {
    double transient_fraction = 0.5;
    double slack = 0.05;       ///< relative slack on the predicted bound
    double floor = 1e-6;       ///< absolute floor, covers exact-zero predictions
    int max_windows = 4096;
};

/// Checks the trajectory tail against max{gain(w_sup), mu}: pass iff the tail
/// sup of |x_t|_A is within the slacked bound. The tail is
/// [T * transient_fraction, T] and must contain at least 10 delay windows
/// (HorizonTooShort). Diverged trajectories fail with the integrator's error.
IssVerdict iss_monitor(const dde::Trajectory& traj, const sets::TargetSet& set,
                       const ComparisonFunction& gain, double w_sup, double mu,
                       const MonitorOptions& opts = {});

/// Non-increasing upper envelope of t -> |x_t|_A (suffix max, reversed).
KLEnvelope empirical_envelope(const dde::Trajectory& traj, const sets::TargetSet& set,
                              int samples = 2048);

}  // namespace setiss::razumikhin
