#pragma once

// Experiment configs and the command pipelines behind the CLI: simulate,
// check-razumikhin, delay-margin, iss-monitor and reproduce-example. The CLI
// binary is a thin wrapper over run().

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "setiss/razumikhin.hpp"
#include "setiss/systems.hpp"

namespace setiss::experiment {

struct ExperimentConfig {
    std::string command;
    uint64_t seed = 0;
    std::string output_dir = ".";

    // system selection
    std::string system_name;        // "oscillator" | "stuart_landau"
    nlohmann::json system_params;   // forwarded to the bundle factory
    std::optional<std::string> set_spec;  // "origin" | "stuart_landau:<alpha>" | "custom:<name>"

    // simulation
    double delay = 0.0;
    double step = 1e-3;
    double horizon = 60.0;
    std::vector<double> initial_state;
    nlohmann::json disturbance;  // {"kind": "zero"|"constant"|"step"|"sinusoid"|"table", ...}

    // check-razumikhin
    long samples = 100000;
    std::optional<razumikhin::SampleBox> box;
    double mutate_alpha3 = 1.0;

    // delay-margin
    std::optional<nlohmann::json> gains_spec;  // {"gamma_theta":…, "gamma1":…, "alpha1":…, "alpha2":…}
    double margin_mu = 0.0;
    double margin_Delta = 1.0;
    double margin_tol = 1e-6;

    // iss-monitor
    double monitor_mu = 1e-3;
    double transient_fraction = 0.5;
    double monitor_slack = 0.05;
    std::optional<double> w_sup;

    // reproduce-example
    std::string which;
    double delay_scale = 0.5;  ///< delayed runs use delay_scale * delta_star
    double reproduce_horizon = 300.0;
};

/// Schema validation happens here; throws ConfigError with field diagnostics.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Registry for "custom:<name>" set specs.
void register_custom_set(const std::string& name, sets::TargetSet set);
sets::TargetSet resolve_set(const std::string& spec, int state_dim);

systems::SystemBundle make_bundle(const std::string& name, const nlohmann::json& params);

dde::DisturbanceSignal make_disturbance(const nlohmann::json& j, int dim);

/// Exit codes: 0 pass/success, 1 verdict-fail (counterexample found or
/// monitor fail), 2 usage/config error (via thrown ConfigError in callers).
int run(const ExperimentConfig& cfg);

}  // namespace setiss::experiment
