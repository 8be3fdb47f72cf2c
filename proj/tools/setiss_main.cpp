// setiss -- command-line front end for the set-ISS laboratory.
//
// Usage: setiss <command> --config <file> [--output-dir <dir>]
// Commands: simulate, check-razumikhin, delay-margin, iss-monitor,
//           reproduce-example.
//
// Exit status: 0 pass/success, 1 verdict-fail, 2 usage/config error.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "setiss/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"set input-to-state stability laboratory"};
    app.require_subcommand(1);

    const char* commands[] = {"simulate", "check-razumikhin", "delay-margin", "iss-monitor",
                              "reproduce-example"};
    std::string config_path, output_dir;
    for (const char* name : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config JSON")->required();
        sub->add_option("--output-dir", output_dir, "artifact directory (overrides the config)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        auto cfg = setiss::experiment::load_config(config_path);
        const std::string invoked = app.get_subcommands().front()->get_name();
        if (cfg.command != invoked)
            throw setiss::ConfigError("config command '" + cfg.command +
                                      "' does not match subcommand '" + invoked + "'");
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        return setiss::experiment::run(cfg);
    } catch (const setiss::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const setiss::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
