#pragma once

// The two built-in case studies, packaged as system + certificate bundles:
// a nonlinear oscillator with delayed velocity feedback, and the forced
// Stuart-Landau oscillator with delayed feedback. Both expose the gains the
// delay-margin analysis needs.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "setiss/dde.hpp"
#include "setiss/gains.hpp"
#include "setiss/razumikhin.hpp"
#include "setiss/sets.hpp"

namespace setiss::systems {

using gains::ComparisonFunction;

/// Scalar stiffness law k with its primitive K(r) = int_0^r k. The default
/// cubic supplies both in closed form; custom laws fall back to fixed-order
/// quadrature for the primitive.
struct StiffnessLaw {
    std::function<double(double)> k;
    std::function<double(double)> primitive;  // optional; quadrature otherwise
    std::string name = "cubic";

    static StiffnessLaw cubic();
    static StiffnessLaw from_function(std::string name, std::function<double(double)> k);

    double integral(double r) const;  // int_0^r k
};

struct OscillatorParams {
    double mu = 1.0;  ///< linear damping coefficient, > 0
    StiffnessLaw stiffness = StiffnessLaw::cubic();
    /// class K-infinity lower envelope of k: k(|s|) >= eta(|s|). Any valid
    /// envelope works; the default s^3 matches the default stiffness.
    ComparisonFunction eta = ComparisonFunction::power(3);
    /// Lipschitz constant of k over the declared box; estimated over
    /// [-lipschitz_radius, lipschitz_radius] when unset.
    std::optional<double> L;
    double lipschitz_radius = 2.0;
};

struct StuartLandauParams {
    double nu_r = 1.0;  ///< > 0
    double nu_i = 0.0;
    double mu_r = 1.0;  ///< > 0
    double mu_i = 0.0;
    std::optional<double> L;
    double lipschitz_radius = 2.0;

    double alpha() const { return mu_r / nu_r; }
};

/// x1' = x2(t - tau), x2' = -k(x1) - mu x2(t - tau) + w   (delayed = true)
/// routes x2(t) instead of x2(t - tau) when delayed = false. The delay value
/// itself is set on the returned system before integrating.
dde::DelaySystem oscillator_system(const OscillatorParams& p, bool delayed);

/// The feedback-perturbation form used for certificate falsification:
/// x1' = x2 + th1, x2' = -k(x1) - mu x2 + th2 + w, disturbance (th1, th2, w).
dde::DelaySystem oscillator_falsification_system(const OscillatorParams& p);

/// z' = -nu |z|^2 z + mu z + u as a 2-d real system; delayed = true reads the
/// feedback terms at z(t - tau).
dde::DelaySystem stuart_landau_system(const StuartLandauParams& p, bool delayed);

/// z' = -nu |z|^2 z + mu z + u + theta, disturbance (th_re, th_im, u_re, u_im).
dde::DelaySystem stuart_landau_falsification_system(const StuartLandauParams& p);

/// Certificate for the oscillator about A = {0}:
/// V = mu^2/2 x1^2 + mu x1 x2 + x2^2 + 2 K(x1) with analytic gradient,
/// envelope-fitted alpha1 (quadratic) and alpha2 (quadratic plus quartic),
/// alpha3 = c min{s^2, s^4} fitted to the 1/4 (|x1| eta(|x1|) + x2^2) decay,
/// and the disturbance/feedback channel gains. The theta-channel gains take
/// the constants derived for mu = 1.
/// Throws EnvelopeFitFailed when the fitted sandwich does not validate.
razumikhin::RazumikhinCertificate oscillator_certificate(const OscillatorParams& p);

/// Certificate for Stuart-Landau about the circle-plus-origin set:
/// V = (1/4 nu_R)[|z|^2 - alpha]^2, alpha1 = alpha2 = s^4/(4 nu_R) stated
/// against the plain circle distance sqrt(||z|^2 - alpha|) (V's exact
/// geometry; the set's piecewise measure cannot upper-bound V near the inner
/// equilibrium), alpha3 = c3/4. The falsification premise channels carry a
/// validated budget scale: with the printed coefficients (2, 4) the
/// implication is refutable in the annulus just inside the circle, where
/// |z|^2 (|z|^2-a)^2 < 2 c3(|z|_A). The published ISS gain gain_w is
/// untouched.
razumikhin::RazumikhinCertificate stuart_landau_certificate(const StuartLandauParams& p);

/// The validated premise budget scale kappa used by the certificate above.
double stuart_landau_budget_scale(const StuartLandauParams& p);

/// Max operator norm of the central finite-difference Jacobian over a grid
/// (>= 64 nodes per dimension), times a 1.1 safety factor.
double lipschitz_estimate(const std::function<void(std::span<const double>, std::span<double>)>& map,
                          int in_dim, int out_dim, std::span<const razumikhin::Interval> box,
                          int grid_per_dim = 256);
/// Scalar convenience overload.
double lipschitz_estimate(const std::function<double(double)>& map, double lo, double hi,
                          int grid = 256);

/// Everything the experiment pipelines need about one case study.
struct SystemBundle {
    std::string name;
    dde::DelaySystem plant;                 ///< delayed-feedback form (delay set by caller)
    dde::DelaySystem plant_undelayed;       ///< same dynamics, no delayed argument
    dde::DelaySystem falsification_system;  ///< feedback-perturbation form, delay-free
    razumikhin::RazumikhinCertificate certificate;
    sets::TargetSet set = sets::origin_set(1);
    ComparisonFunction gamma;        ///< disturbance gain (the monitor gain)
    ComparisonFunction gamma_theta;  ///< feedback-perturbation gain
    ComparisonFunction gamma1;       ///< state-channel rate bound 10 L max |f|
    ComparisonFunction gamma2;       ///< disturbance-channel rate bound 10 L s
    double L = 0.0;
    double premise_budget_scale = 1.0;  ///< kappa applied to the premise channels
    razumikhin::SampleBox declared_box;  ///< falsification box
    // reproduction defaults
    std::vector<double> default_initial_state;
    std::vector<double> sweep_amplitudes;
    double margin_mu = 1e-3;
    double margin_Delta = 2.0;
};

SystemBundle oscillator_bundle(const OscillatorParams& p = {});
SystemBundle stuart_landau_bundle(const StuartLandauParams& p = {});

}  // namespace setiss::systems
