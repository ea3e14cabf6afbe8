// kslab command-line entry point: run / sweep / theory / verify.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kslab/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for a chemotaxis system with "
                 "signal-dependent sensitivity"};
    app.require_subcommand(1);

    struct SubOpts {
        std::string config;
        std::vector<std::string> sets;
        std::string out;
        std::optional<std::uint64_t> seed;
        std::optional<int> workers;
    };

    auto add_common = [](CLI::App* sub, SubOpts& o, bool with_workers) {
        sub->add_option("--config", o.config, "JSON configuration file")->required();
        sub->add_option("--set", o.sets,
                        "override a config entry, key.path=value (repeatable)");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", [&o](const CLI::results_t& res) {
            o.seed = std::stoull(res[0]);
            return true;
        }, "seed override");
        if (with_workers)
            sub->add_option("--workers", [&o](const CLI::results_t& res) {
                o.workers = std::stoi(res[0]);
                return true;
            }, "parallel workers across sweep cells");
    };

    SubOpts run_o, sweep_o, theory_o, verify_o;
    CLI::App* run_cmd = app.add_subcommand("run", "integrate one configuration");
    add_common(run_cmd, run_o, false);
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "parameter sweep over (chi, M)");
    add_common(sweep_cmd, sweep_o, true);
    CLI::App* theory_cmd =
        app.add_subcommand("theory", "evaluate the closed-form constant report");
    add_common(theory_cmd, theory_o, false);
    CLI::App* verify_cmd =
        app.add_subcommand("verify", "fast property battery for one configuration");
    add_common(verify_cmd, verify_o, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kslab::cli::kExitConfig : 0;
    }

    auto to_opts = [](const SubOpts& o) {
        kslab::cli::CommonOpts c;
        c.config_path = o.config;
        c.overrides = o.sets;
        if (!o.out.empty()) c.out_dir = o.out;
        c.seed = o.seed;
        c.workers = o.workers;
        return c;
    };

    if (run_cmd->parsed()) return kslab::cli::cmd_run(to_opts(run_o), std::cout, std::cerr);
    if (sweep_cmd->parsed())
        return kslab::cli::cmd_sweep(to_opts(sweep_o), std::cout, std::cerr);
    if (theory_cmd->parsed())
        return kslab::cli::cmd_theory(to_opts(theory_o), std::cout, std::cerr);
    return kslab::cli::cmd_verify(to_opts(verify_o), std::cout, std::cerr);
}
