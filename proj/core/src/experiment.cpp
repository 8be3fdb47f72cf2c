#include "setiss/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace setiss::experiment {

using nlohmann::json;
namespace fs = std::filesystem;
using gains::ComparisonFunction;

namespace {

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

void write_meta(const fs::path& dir, const std::string& command, double seconds) {
    // timestamps live here so verdict artifacts stay byte-identical across runs
    json meta;
    meta["command"] = command;
    meta["duration_seconds"] = seconds;
    meta["written_at_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch()).count();
    write_json(dir / "run_meta.json", meta);
}

void write_envelope_csv(const fs::path& p, const gains::KLEnvelope& env) {
    std::ostringstream out;
    out << "t_offset,bound\n";
    char buf[32];
    for (const auto& [t, v] : env.samples) {
        std::snprintf(buf, sizeof buf, "%.17g", t);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << '\n';
    }
    write_text(p, out.str());
}

double get_num(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(std::string("config field '") + key + "' must be a number");
    return j[key].get<double>();
}

std::map<std::string, sets::TargetSet>& custom_sets() {
    static std::map<std::string, sets::TargetSet> reg;
    return reg;
}

}  // namespace

void register_custom_set(const std::string& name, sets::TargetSet set) {
    custom_sets().insert_or_assign(name, std::move(set));
}

sets::TargetSet resolve_set(const std::string& spec, int state_dim) {
    if (spec == "origin") return sets::origin_set(state_dim);
    if (spec.rfind("stuart_landau", 0) == 0) {
        double alpha = 1.0;
        if (auto pos = spec.find(':'); pos != std::string::npos)
            alpha = std::stod(spec.substr(pos + 1));
        return sets::stuart_landau_set(alpha);
    }
    if (spec.rfind("custom:", 0) == 0) {
        const std::string name = spec.substr(7);
        auto it = custom_sets().find(name);
        if (it == custom_sets().end()) throw ConfigError("unknown custom set '" + name + "'");
        return it->second;
    }
    throw ConfigError("unknown set spec '" + spec + "'");
}

systems::SystemBundle make_bundle(const std::string& name, const json& params) {
    if (name == "oscillator") {
        systems::OscillatorParams p;
        p.mu = get_num(params, "mu", 1.0);
        if (params.contains("L")) p.L = params["L"].get<double>();
        p.lipschitz_radius = get_num(params, "lipschitz_radius", 2.0);
        return systems::oscillator_bundle(p);
    }
    if (name == "stuart_landau") {
        systems::StuartLandauParams p;
        p.nu_r = get_num(params, "nu_r", 1.0);
        p.nu_i = get_num(params, "nu_i", 0.0);
        p.mu_r = get_num(params, "mu_r", 1.0);
        p.mu_i = get_num(params, "mu_i", 0.0);
        if (params.contains("L")) p.L = params["L"].get<double>();
        p.lipschitz_radius = get_num(params, "lipschitz_radius", 2.0);
        return systems::stuart_landau_bundle(p);
    }
    throw ConfigError("unknown system '" + name + "' (expected oscillator or stuart_landau)");
}

dde::DisturbanceSignal make_disturbance(const json& j, int dim) {
    if (j.is_null()) return dde::DisturbanceSignal::zero(dim);
    if (!j.is_object() || !j.contains("kind"))
        throw ConfigError("disturbance: expected {\"kind\": ...}");
    const std::string kind = j["kind"].get<std::string>();

    auto amplitude = [&](const char* key) {
        std::vector<double> a(static_cast<size_t>(dim), 0.0);
        if (!j.contains(key)) return a;
        if (j[key].is_number()) {
            a[0] = j[key].get<double>();
        } else if (j[key].is_array()) {
            auto v = j[key].get<std::vector<double>>();
            if (static_cast<int>(v.size()) != dim)
                throw ConfigError("disturbance amplitude dimension mismatch");
            a = v;
        } else {
            throw ConfigError("disturbance amplitude must be a number or array");
        }
        return a;
    };

    if (kind == "zero") return dde::DisturbanceSignal::zero(dim);
    if (kind == "constant") return dde::DisturbanceSignal::constant(amplitude("amplitude"));
    if (kind == "step")
        return dde::DisturbanceSignal::step(get_num(j, "t_on", 0.0), amplitude("amplitude"));
    if (kind == "sinusoid")
        return dde::DisturbanceSignal::sinusoid(amplitude("amplitude"), get_num(j, "freq", 1.0),
                                                get_num(j, "phase", 0.0));
    if (kind == "table") {
        if (!j.contains("times") || !j.contains("values"))
            throw ConfigError("table disturbance needs times and values");
        return dde::DisturbanceSignal::table(j["times"].get<std::vector<double>>(),
                                             j["values"].get<std::vector<std::vector<double>>>());
    }
    throw ConfigError("unknown disturbance kind '" + kind + "'");
}

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig cfg;
    if (!j.contains("command") || !j["command"].is_string())
        throw ConfigError("config: missing string field 'command'");
    cfg.command = j["command"].get<std::string>();
    static const char* known[] = {"simulate", "check-razumikhin", "delay-margin", "iss-monitor",
                                  "reproduce-example"};
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char* k) { return cfg.command == k; }) == std::end(known))
        throw ConfigError("config: unknown command '" + cfg.command + "'");

    if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();

    if (j.contains("system")) {
        const auto& s = j["system"];
        if (s.is_string()) {
            cfg.system_name = s.get<std::string>();
        } else if (s.is_object() && s.contains("name")) {
            cfg.system_name = s["name"].get<std::string>();
            if (s.contains("params")) cfg.system_params = s["params"];
        } else {
            throw ConfigError("config: 'system' must be a name or {name, params}");
        }
    }
    if (j.contains("set")) cfg.set_spec = j["set"].get<std::string>();

    cfg.delay = get_num(j, "delay", 0.0);
    cfg.step = get_num(j, "step", 1e-3);
    cfg.horizon = get_num(j, "horizon", 60.0);
    if (!(cfg.step > 0.0)) throw ConfigError("config: 'step' must be positive");
    if (!std::isfinite(cfg.delay) || cfg.delay < 0.0)
        throw ConfigError("config: 'delay' must be finite and >= 0");
    if (!std::isfinite(cfg.horizon)) throw ConfigError("config: 'horizon' must be finite");
    if (j.contains("initial_state")) cfg.initial_state = j["initial_state"].get<std::vector<double>>();
    if (j.contains("disturbance")) cfg.disturbance = j["disturbance"];

    if (j.contains("samples")) {
        cfg.samples = j["samples"].get<long>();
        if (cfg.samples < 1) throw ConfigError("config: 'samples' must be >= 1");
    }
    if (j.contains("box")) {
        const auto& b = j["box"];
        razumikhin::SampleBox box;
        auto read_axes = [](const json& arr) {
            std::vector<razumikhin::Interval> out;
            for (const auto& iv : arr) {
                if (!iv.is_array() || iv.size() != 2) throw ConfigError("box axes must be [lo, hi]");
                out.push_back({iv[0].get<double>(), iv[1].get<double>()});
            }
            return out;
        };
        if (b.contains("x")) box.x = read_axes(b["x"]);
        if (b.contains("x_delayed")) box.x_delayed = read_axes(b["x_delayed"]);
        if (b.contains("w")) box.w = read_axes(b["w"]);
        cfg.box = std::move(box);
    }
    cfg.mutate_alpha3 = get_num(j, "mutate_alpha3", 1.0);

    if (j.contains("gains")) cfg.gains_spec = j["gains"];
    cfg.margin_mu = get_num(j, "mu", cfg.command == "delay-margin" ? 0.0 : 1e-3);
    cfg.margin_Delta = get_num(j, "Delta", 1.0);
    cfg.margin_tol = get_num(j, "tolerance", 1e-6);

    if (j.contains("monitor")) {
        const auto& m = j["monitor"];
        cfg.monitor_mu = get_num(m, "mu", 1e-3);
        cfg.transient_fraction = get_num(m, "transient_fraction", 0.5);
        cfg.monitor_slack = get_num(m, "slack", 0.05);
        if (m.contains("w_sup")) cfg.w_sup = m["w_sup"].get<double>();
    }

    if (j.contains("which")) cfg.which = j["which"].get<std::string>();
    cfg.delay_scale = get_num(j, "delay_scale", 0.5);
    cfg.reproduce_horizon = get_num(j, "reproduce_horizon", 300.0);

    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

int run_simulate(const ExperimentConfig& cfg, const fs::path& dir) {
    auto bundle = make_bundle(cfg.system_name, cfg.system_params);
    dde::DelaySystem sys = cfg.delay > 0.0 ? bundle.plant : bundle.plant_undelayed;
    sys.delay = cfg.delay;

    std::vector<double> x0 = cfg.initial_state.empty() ? bundle.default_initial_state : cfg.initial_state;
    if (static_cast<int>(x0.size()) != sys.state_dim)
        throw ConfigError("initial_state dimension mismatch");

    const auto w = make_disturbance(cfg.disturbance, sys.disturbance_dim);
    const auto init = HistoryWindow::constant(x0, cfg.delay, 0.0);
    const auto traj = dde::integrate(sys, init, w, cfg.horizon, cfg.step);

    const auto set = cfg.set_spec ? resolve_set(*cfg.set_spec, sys.state_dim) : bundle.set;
    dde::write_trajectory_csv(traj, (dir / "trajectory.csv").string(), &set);

    json verdict;
    verdict["schema"] = 1;
    verdict["command"] = "simulate";
    verdict["status"] = to_string(traj.status);
    verdict["step_used"] = traj.step_fine;
    verdict["step_adjusted"] = traj.step_adjusted();
    verdict["t_end"] = traj.t_end();
    write_json(dir / "verdict.json", verdict);
    return traj.status == dde::TrajectoryStatus::Complete ? 0 : 1;
}

int run_check(const ExperimentConfig& cfg, const fs::path& dir) {
    auto bundle = make_bundle(cfg.system_name, cfg.system_params);
    auto cert = bundle.certificate;
    if (cfg.mutate_alpha3 != 1.0)
        cert.alpha3 = ComparisonFunction::scaled(cfg.mutate_alpha3, cert.alpha3);

    razumikhin::FalsifyOptions opts;
    opts.n = cfg.samples;
    opts.seed = cfg.seed;
    const auto box = cfg.box ? *cfg.box : bundle.declared_box;
    const auto verdict = razumikhin::falsify_x_premise(cert, bundle.falsification_system, box, opts);

    json out = verdict.to_json();
    out["command"] = "check-razumikhin";
    out["system"] = bundle.name;
    out["seed"] = cfg.seed;
    out["mutate_alpha3"] = cfg.mutate_alpha3;
    write_json(dir / "verdict.json", out);
    return verdict.passed() ? 0 : 1;
}

int run_margin(const ExperimentConfig& cfg, const fs::path& dir) {
    ComparisonFunction gamma_theta, gamma1, alpha1, alpha2;
    if (cfg.gains_spec) {
        const auto& g = *cfg.gains_spec;
        auto need = [&](const char* key) {
            if (!g.contains(key)) throw ConfigError(std::string("gains: missing '") + key + "'");
            return ComparisonFunction::from_json(g[key]);
        };
        gamma_theta = need("gamma_theta");
        gamma1 = need("gamma1");
        alpha1 = g.contains("alpha1") ? ComparisonFunction::from_json(g["alpha1"])
                                      : ComparisonFunction::identity();
        alpha2 = g.contains("alpha2") ? ComparisonFunction::from_json(g["alpha2"])
                                      : ComparisonFunction::identity();
    } else if (!cfg.system_name.empty()) {
        auto bundle = make_bundle(cfg.system_name, cfg.system_params);
        gamma_theta = bundle.gamma_theta;
        gamma1 = bundle.gamma1;
        alpha1 = bundle.certificate.alpha1;
        alpha2 = bundle.certificate.alpha2;
    } else {
        throw ConfigError("delay-margin needs either 'gains' or 'system'");
    }

    const auto rep = razumikhin::delay_margin(gamma_theta, gamma1, alpha1, alpha2,
                                              cfg.margin_mu, cfg.margin_Delta, cfg.margin_tol);
    json out = rep.to_json();
    out["command"] = "delay-margin";
    write_json(dir / "margin.json", out);
    return (rep.status == razumikhin::MarginStatus::Converged ||
            rep.status == razumikhin::MarginStatus::Unbounded)
               ? 0
               : 1;
}

int run_monitor(const ExperimentConfig& cfg, const fs::path& dir) {
    auto bundle = make_bundle(cfg.system_name, cfg.system_params);
    dde::DelaySystem sys = cfg.delay > 0.0 ? bundle.plant : bundle.plant_undelayed;
    sys.delay = cfg.delay;

    std::vector<double> x0 = cfg.initial_state.empty() ? bundle.default_initial_state : cfg.initial_state;
    const auto w = make_disturbance(cfg.disturbance, sys.disturbance_dim);
    const auto init = HistoryWindow::constant(x0, cfg.delay, 0.0);
    const auto traj = dde::integrate(sys, init, w, cfg.horizon, cfg.step);

    razumikhin::MonitorOptions mopts;
    mopts.transient_fraction = cfg.transient_fraction;
    mopts.slack = cfg.monitor_slack;
    const double wsup = cfg.w_sup ? *cfg.w_sup : w.sup_norm();
    const auto verdict =
        razumikhin::iss_monitor(traj, bundle.set, bundle.gamma, wsup, cfg.monitor_mu, mopts);

    dde::write_trajectory_csv(traj, (dir / "trajectory.csv").string(), &bundle.set);
    write_envelope_csv(dir / "envelope.csv", verdict.envelope);
    json out = verdict.to_json();
    out["command"] = "iss-monitor";
    out["system"] = bundle.name;
    out["w_sup"] = wsup;
    out["mu"] = cfg.monitor_mu;
    write_json(dir / "verdict.json", out);
    return verdict.pass ? 0 : 1;
}

int run_reproduce(const ExperimentConfig& cfg, const fs::path& dir) {
    const std::string which = cfg.which.empty() ? cfg.system_name : cfg.which;
    if (which != "oscillator" && which != "stuart_landau")
        throw ConfigError("reproduce-example: 'which' must be oscillator or stuart_landau");
    auto bundle = make_bundle(which, cfg.system_params);

    json report;
    report["schema"] = 1;
    report["example"] = which;
    bool all_pass = true;

    // 1. certificate falsification (sandwich + implication)
    {
        const auto sandwich = razumikhin::check_sandwich(bundle.certificate, bundle.declared_box,
                                                         20000, cfg.seed);
        razumikhin::FalsifyOptions opts;
        opts.n = cfg.samples;
        opts.seed = cfg.seed;
        const auto falsify = razumikhin::falsify_x_premise(bundle.certificate,
                                                           bundle.falsification_system,
                                                           bundle.declared_box, opts);
        report["stages"]["sandwich"] = sandwich.to_json();
        report["stages"]["certificate"] = falsify.to_json();
        all_pass = all_pass && sandwich.passed() && falsify.passed();
    }

    // 2. Lipschitz constant (estimated in the bundle factory)
    report["stages"]["lipschitz"] = {{"L", bundle.L}};

    // 3. delay margin
    const auto margin = razumikhin::delay_margin(bundle.gamma_theta, bundle.gamma1,
                                                 bundle.certificate.alpha1, bundle.certificate.alpha2,
                                                 bundle.margin_mu, bundle.margin_Delta, 1e-6);
    report["stages"]["margin"] = margin.to_json();
    const bool margin_ok = margin.status == razumikhin::MarginStatus::Converged ||
                           margin.status == razumikhin::MarginStatus::Unbounded;
    all_pass = all_pass && margin_ok;

    double delayed_delta = 0.0;
    if (std::isfinite(margin.delta_star)) delayed_delta = cfg.delay_scale * margin.delta_star;
    else delayed_delta = 0.1;  // unbounded margin: any modest delay qualifies
    report["delayed_run_delta"] = delayed_delta;

    // 4+5. simulate at delta in {0, scaled delta*} x amplitude sweep (each
    // sweep as one concurrent batch), monitor each run against the no-delay
    // gain.
    json sims = json::array();
    json monitors = json::array();
    const double T = cfg.reproduce_horizon;
    for (double delta : {0.0, delayed_delta}) {
        dde::DelaySystem sys = delta > 0.0 ? bundle.plant : bundle.plant_undelayed;
        sys.delay = delta;
        std::vector<dde::SimCase> cases;
        for (double amp : bundle.sweep_amplitudes) {
            std::vector<double> w_amp(static_cast<size_t>(sys.disturbance_dim), 0.0);
            w_amp[0] = amp;
            cases.push_back({HistoryWindow::constant(bundle.default_initial_state, delta, 0.0),
                             dde::DisturbanceSignal::step(0.0, w_amp)});
        }
        const auto runs = dde::batch_simulate(sys, cases, T, cfg.step);

        for (size_t i = 0; i < runs.size(); ++i) {
            const double amp = bundle.sweep_amplitudes[i];
            const auto& traj = runs[i];
            std::ostringstream tag;
            tag << (delta > 0.0 ? "delayed" : "nodelay") << "_amp" << amp;
            const std::string base = tag.str();

            json sim;
            sim["delta"] = delta;
            sim["amplitude"] = amp;
            sim["status"] = to_string(traj.status);
            sim["csv"] = base + ".csv";
            sims.push_back(sim);
            const bool sim_ok = traj.status == dde::TrajectoryStatus::Complete;
            all_pass = all_pass && sim_ok;
            if (traj.status == dde::TrajectoryStatus::Failed) continue;
            dde::write_trajectory_csv(traj, (dir / (base + ".csv")).string(), &bundle.set);
            if (!sim_ok) continue;

            razumikhin::MonitorOptions mopts;
            mopts.transient_fraction = cfg.transient_fraction;
            mopts.slack = cfg.monitor_slack;
            const auto verdict = razumikhin::iss_monitor(traj, bundle.set, bundle.gamma,
                                                         cases[i].disturbance.sup_norm(),
                                                         cfg.monitor_mu, mopts);
            write_envelope_csv(dir / (base + ".envelope.csv"), verdict.envelope);
            json mon = verdict.to_json();
            mon["delta"] = delta;
            mon["amplitude"] = amp;
            monitors.push_back(mon);
            all_pass = all_pass && verdict.pass;
        }
    }
    report["stages"]["simulations"] = sims;
    report["stages"]["monitors"] = monitors;
    report["pass"] = all_pass;
    write_json(dir / "report.json", report);
    return all_pass ? 0 : 1;
}

}  // namespace

int run(const ExperimentConfig& cfg) {
    Timer timer;
    const fs::path dir = cfg.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string());

    int code = 2;
    if (cfg.command == "simulate") code = run_simulate(cfg, dir);
    else if (cfg.command == "check-razumikhin") code = run_check(cfg, dir);
    else if (cfg.command == "delay-margin") code = run_margin(cfg, dir);
    else if (cfg.command == "iss-monitor") code = run_monitor(cfg, dir);
    else if (cfg.command == "reproduce-example") code = run_reproduce(cfg, dir);
    else throw ConfigError("unknown command '" + cfg.command + "'");

    write_meta(dir, cfg.command, timer.seconds());
    return code;
}

}  // namespace setiss::experiment
