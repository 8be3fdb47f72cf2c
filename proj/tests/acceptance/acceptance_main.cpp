// Acceptance suite: one pass/fail line per criterion, exit 0 only if all
// pass. Run through ctest (`ctest -R acceptance`) or directly; artifacts for
// the end-to-end criterion land in a temp directory.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "setiss/experiment.hpp"
#include "setiss/razumikhin.hpp"
#include "setiss/systems.hpp"

using namespace setiss;
using CF = gains::ComparisonFunction;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    std::string name;
    std::function<bool(std::string&)> run;
};

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch()).count();
}

// ---------------------------------------------------------------- criterion 1
bool c1_gain_roundtrip(std::string& detail) {
    const double start = now_seconds();
    const CF fns[] = {CF::identity(), CF::power(3), gains::c3_gain(1.0),
                      gains::oscillator_gamma(1.0)};
    const char* names[] = {"identity", "s^3", "c3", "oscillator_gamma"};
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> us(0.0, 50.0);
    double worst = 0.0;
    for (int f = 0; f < 4; ++f) {
        for (int i = 0; i < 1000; ++i) {
            const double y = fns[f](us(rng));
            const double s = fns[f].invert(y);
            const double err = std::abs(fns[f](s) - y) / std::max(1.0, y);
            worst = std::max(worst, err);
            if (err > 1e-9) {
                detail = std::string("round-trip error ") + std::to_string(err) + " on " + names[f];
                return false;
            }
        }
    }
    const double elapsed = now_seconds() - start;
    std::ostringstream os;
    os << "worst relative error " << worst << ", " << elapsed << " s";
    detail = os.str();
    return elapsed < 1.0;
}

// ---------------------------------------------------------------- criterion 2
bool c2_integrator_order(std::string& detail) {
    const double start = now_seconds();
    auto sys = systems::oscillator_system({}, false);
    const std::vector<double> x0 = {1.0, 1.0};
    const auto init = HistoryWindow::constant(x0, 0.0);
    const auto w = dde::DisturbanceSignal::zero(1);
    const double T = 5.0;

    const auto ref = dde::integrate(sys, init, w, T, 1e-5);
    std::vector<double> xr(2), x(2);
    ref.solution->value_at(T, xr);

    std::vector<double> errs;
    for (double h : {1e-2, 5e-3, 2.5e-3}) {
        const auto traj = dde::integrate(sys, init, w, T, h);
        traj.solution->value_at(T, x);
        errs.push_back(std::hypot(x[0] - xr[0], x[1] - xr[1]));
    }
    const double r1 = errs[0] / errs[1], r2 = errs[1] / errs[2];

    // zero-delay bitwise reduction against plain RK4, same arithmetic
    const auto traj = dde::integrate(sys, init, w, 1.0, 1e-3);
    std::vector<double> xc = x0;
    {
        const double h = traj.step_fine;
        std::vector<double> k1(2), k2(2), k3(2), k4(2), xs(2), wv(1, 0.0);
        for (long i = 0; i < 1000; ++i) {
            const double t = h * static_cast<double>(i);
            sys.rhs(t, xc, xc, wv, k1);
            const double half = 0.5 * h;
            for (int q = 0; q < 2; ++q) xs[q] = xc[q] + half * k1[q];
            sys.rhs(t + half, xs, xs, wv, k2);
            for (int q = 0; q < 2; ++q) xs[q] = xc[q] + half * k2[q];
            sys.rhs(t + half, xs, xs, wv, k3);
            for (int q = 0; q < 2; ++q) xs[q] = xc[q] + h * k3[q];
            sys.rhs(t + h, xs, xs, wv, k4);
            for (int q = 0; q < 2; ++q)
                xc[q] = xc[q] + (h / 6.0) * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        }
    }
    const auto xl = traj.solution->node_state(traj.solution->nodes() - 1);
    const bool bitwise = xl[0] == xc[0] && xl[1] == xc[1];

    const double elapsed = now_seconds() - start;
    std::ostringstream os;
    os << "error ratios " << r1 << ", " << r2 << " (need >= 8); zero-delay bitwise "
       << (bitwise ? "yes" : "NO") << "; " << elapsed << " s";
    detail = os.str();
    return r1 >= 8.0 && r2 >= 8.0 && bitwise && elapsed < 10.0;
}

// ---------------------------------------------------------------- criterion 3
bool c3_invariance(std::string& detail) {
    auto osc = systems::oscillator_system({}, false);
    const auto t1 = dde::integrate(osc, HistoryWindow::constant(std::vector<double>{0.0, 0.0}, 0.0),
                                   dde::DisturbanceSignal::zero(1), 50.0, 1e-3);
    const auto A0 = sets::origin_set(2);
    double worst_osc = 0.0;
    for (size_t i = 0; i < t1.solution->nodes(); ++i)
        worst_osc = std::max(worst_osc, A0.distance(t1.solution->node_state(i)));

    auto sl = systems::stuart_landau_system({}, false);
    const std::vector<double> z0 = {std::cos(0.7), std::sin(0.7)};
    const auto t2 = dde::integrate(sl, HistoryWindow::constant(z0, 0.0),
                                   dde::DisturbanceSignal::zero(2), 50.0, 1e-3);
    const auto Asl = sets::stuart_landau_set(1.0);
    double worst_sl = 0.0;
    for (size_t i = 0; i < t2.solution->nodes(); ++i)
        worst_sl = std::max(worst_sl, Asl.distance(t2.solution->node_state(i)));

    std::ostringstream os;
    os << "oscillator dist " << worst_osc << ", stuart-landau dist " << worst_sl
       << " (tol 1e-6)";
    detail = os.str();
    return worst_osc <= 1e-6 && worst_sl <= 1e-6;
}

// ---------------------------------------------------------------- criterion 4
bool c4_certificates(std::string& detail) {
    std::ostringstream os;
    bool ok = true;
    for (const char* which : {"oscillator", "stuart_landau"}) {
        const auto bundle = std::string(which) == "oscillator" ? systems::oscillator_bundle()
                                                               : systems::stuart_landau_bundle();
        razumikhin::FalsifyOptions opts;
        opts.n = 100000;

        const double t0 = now_seconds();
        const auto clean = razumikhin::falsify_x_premise(bundle.certificate,
                                                         bundle.falsification_system,
                                                         bundle.declared_box, opts);
        auto mutant = bundle.certificate;
        mutant.alpha3 = CF::scaled(10.0, mutant.alpha3);
        const auto broken = razumikhin::falsify_x_premise(mutant, bundle.falsification_system,
                                                          bundle.declared_box, opts);
        const double dt = now_seconds() - t0;

        const bool this_ok = clean.passed() && clean.premise_hits >= 1000 &&
                             broken.status == razumikhin::FalsifyStatus::CounterexampleFound &&
                             dt < 60.0;
        os << which << ": clean " << (clean.passed() ? "pass" : "FAIL") << " ("
           << clean.premise_hits << " hits), mutant "
           << (broken.counterexample ? "falsified at sample " +
                                           std::to_string(broken.counterexample->sample_index)
                                     : "NOT falsified")
           << ", " << dt << " s; ";
        ok = ok && this_ok;
    }
    detail = os.str();
    return ok;
}

// ---------------------------------------------------------------- criterion 5
bool c5_linear_margin(std::string& detail) {
    const auto rep = razumikhin::delay_margin(CF::linear(2.0), CF::linear(5.0), CF::identity(),
                                              CF::identity(), 0.0, 10.0, 1e-6);
    std::ostringstream os;
    os << "delta* = " << rep.delta_star << " (oracle 1/(2*5) = 0.1, tol 1e-6), status "
       << to_string(rep.status);
    detail = os.str();
    return rep.status == razumikhin::MarginStatus::Converged &&
           std::abs(rep.delta_star - 0.1) <= 1e-6;
}

// ------------------------------------------------------------- criteria 6 & 7
bool gain_preservation(const systems::SystemBundle& bundle, std::span<const double> amplitudes,
                       std::string& detail) {
    const auto margin = razumikhin::delay_margin(bundle.gamma_theta, bundle.gamma1,
                                                 bundle.certificate.alpha1,
                                                 bundle.certificate.alpha2,
                                                 bundle.margin_mu, bundle.margin_Delta, 1e-6);
    if (margin.status != razumikhin::MarginStatus::Converged) {
        detail = "margin did not converge";
        return false;
    }
    const double delta = 0.5 * margin.delta_star;

    std::ostringstream os;
    os << "delta*/2 = " << delta << "; ";
    auto sys = bundle.plant;
    sys.delay = delta;
    std::vector<dde::SimCase> cases;
    for (double amp : amplitudes) {
        std::vector<double> w_amp(static_cast<size_t>(sys.disturbance_dim), 0.0);
        w_amp[0] = amp;
        cases.push_back({HistoryWindow::constant(bundle.default_initial_state, delta, 0.0),
                         dde::DisturbanceSignal::step(0.0, w_amp)});
    }
    const auto runs = dde::batch_simulate(sys, cases, 300.0, 1e-3);

    bool ok = true;
    for (size_t i = 0; i < runs.size(); ++i) {
        const double amp = amplitudes[i];
        razumikhin::MonitorOptions mopts;  // 5% slack
        const auto verdict = razumikhin::iss_monitor(runs[i], bundle.set, bundle.gamma, amp, 1e-3, mopts);
        os << "|w|=" << amp << ": observed " << verdict.ultimate_bound_observed << " vs bound "
           << verdict.predicted_bound << (verdict.pass ? " pass; " : " FAIL; ");
        ok = ok && verdict.pass;
    }
    detail = os.str();
    return ok;
}

bool c6_oscillator_gain(std::string& detail) {
    const double amps[] = {0.01, 0.05, 0.1};
    return gain_preservation(systems::oscillator_bundle(), amps, detail);
}

bool c7_stuart_landau_gain(std::string& detail) {
    const double amps[] = {0.01, 0.05};
    return gain_preservation(systems::stuart_landau_bundle(), amps, detail);
}

// ---------------------------------------------------------------- criterion 8
bool c8_attenuation(std::string& detail) {
    std::ostringstream os;
    bool ok = true;
    const std::pair<const char*, CF> psis[] = {
        {"s", CF::identity()},
        {"s^2", CF::power(2)},
        {"e^s-1", CF::custom("expm1", [](double s) { return std::expm1(s); }, gains::FnClass::KInf)},
    };
    for (const auto& [name, psi] : psis) {
        const auto prof = razumikhin::construct_attenuation(psi, 0.05);
        bool bound_ok = true, flat_ok = true;
        for (int i = 0; i <= 10000; ++i) {
            const double s = 5.0 * i / 10000.0;
            const double b = prof.b(s);
            if (!(b > 0.0) || b * (0.5 + psi(s)) > 1.0 + 1e-9) bound_ok = false;
            if (s <= prof.r0 && b != 1.0) flat_ok = false;
        }
        os << "psi=" << name << ": r0=" << prof.r0 << (bound_ok && flat_ok ? " ok; " : " FAIL; ");
        ok = ok && bound_ok && flat_ok;
    }
    detail = os.str();
    return ok;
}

// ---------------------------------------------------------------- criterion 9
bool c9_norm_inequality(std::string& detail) {
    const auto A0 = sets::origin_set(2);
    const auto Asl = sets::stuart_landau_set(1.0);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> amp(-2.5, 2.5), freq(0.2, 5.0), len(0.05, 2.0);
    double worst_violation = -1e9;
    for (int i = 0; i < 500; ++i) {
        const double a0 = amp(rng), a1 = amp(rng), b0 = amp(rng), b1 = amp(rng);
        const double f0 = freq(rng), f1 = freq(rng);
        const auto w = HistoryWindow::from_function(
            [=](double t, std::span<double> x) {
                x[0] = a0 + b0 * std::sin(f0 * t);
                x[1] = a1 + b1 * std::cos(f1 * t);
            }, 2, len(rng), 0.0, 65);
        for (const auto* A : {&A0, &Asl}) {
            const double gap = sets::seg_sup_norm(*A, w) - sets::seg_infmax_norm(*A, w);
            worst_violation = std::max(worst_violation, gap);
            if (gap > 1e-8) {
                detail = "violated by " + std::to_string(gap);
                return false;
            }
        }
    }
    std::ostringstream os;
    os << "500 windows per set, worst gap " << worst_violation << " (tol 1e-8)";
    detail = os.str();
    return true;
}

// --------------------------------------------------------------- criterion 10
bool c10_reproduce(std::string& detail) {
    const double start = now_seconds();
    const fs::path dir = fs::temp_directory_path() / "setiss_acceptance_reproduce";
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir);

    std::ostringstream os;
    bool ok = true;
    for (const char* which : {"oscillator", "stuart_landau"}) {
        const fs::path sub = dir / which;
        fs::create_directories(sub);
        const fs::path cfg_path = sub / "config.json";
        {
            std::ofstream cfg(cfg_path);
            cfg << json{{"command", "reproduce-example"}, {"which", which}, {"seed", 1}}.dump(2);
        }
        const std::string cmd = std::string(SETISS_TOOL_PATH) + " reproduce-example --config " +
                                cfg_path.string() + " --output-dir " + sub.string() +
                                " > " + (sub / "stdout.txt").string() + " 2>&1";
        const int rc = std::system(cmd.c_str());
        const int code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;

        bool stages_ok = false;
        std::string why = "report missing";
        if (fs::exists(sub / "report.json")) {
            std::ifstream in(sub / "report.json");
            json report;
            in >> report;
            stages_ok = report.value("pass", false);
            if (!stages_ok) why = "report.pass == false";
        }
        os << which << ": exit " << code << ", stages " << (stages_ok ? "pass" : why) << "; ";
        ok = ok && code == 0 && stages_ok;
    }
    const double elapsed = now_seconds() - start;
    os << elapsed << " s (budget 300)";
    detail = os.str();
    return ok && elapsed < 300.0;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "gain algebra inverse round-trip", c1_gain_roundtrip},
        {2, "integrator convergence order and bitwise zero-delay reduction", c2_integrator_order},
        {3, "set invariance of the unforced case studies", c3_invariance},
        {4, "certificate falsification: clean pass, mutants falsified", c4_certificates},
        {5, "linear delay margin against the closed form", c5_linear_margin},
        {6, "oscillator keeps its no-delay gain below the margin", c6_oscillator_gain},
        {7, "stuart-landau keeps its no-delay gain below the margin", c7_stuart_landau_gain},
        {8, "attenuation profile bound and flat region", c8_attenuation},
        {9, "segment norm ordering on random windows", c9_norm_inequality},
        {10, "end-to-end reproduce-example for both case studies", c10_reproduce},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const double t0 = now_seconds();
        std::string detail;
        bool pass = false;
        try {
            pass = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double dt = now_seconds() - t0;
        std::printf("[%s] criterion %2d: %s  (%s) [%.2f s]\n", pass ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), detail.c_str(), dt);
        std::fflush(stdout);
        if (!pass) ++failures;
    }
    if (failures > 0) {
        std::printf("acceptance: %d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("acceptance: all %zu criteria passed\n", criteria.size());
    return 0;
}
