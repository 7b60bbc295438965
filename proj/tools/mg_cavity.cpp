#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mg/config.hpp"
#include "mg/errors.hpp"
#include "mg/harness.hpp"
#include "mg/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"minority-game laboratory: agent-based runs and stationary-state "
                 "theory for nonlinear market-clearing prices"};
    app.set_version_flag("--version", std::string(mg::kVersion));

    std::string mode;
    std::string config_path;
    int workers = 0;
    std::string out;
    std::uint64_t seed = 0;
    bool have_seed = false;

    app.add_option("mode", mode, "command: simulate | solve | sweep | dynamics | compare | alpha-c")
        ->required()
        ->check(CLI::IsMember(
            {"simulate", "solve", "sweep", "dynamics", "compare", "alpha-c"}));
    app.add_option("--config", config_path, "YAML run recipe")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--workers", workers, "override the recipe's worker count");
    app.add_option("--out", out, "override the recipe's output directory");
    app.add_option("--seed", seed, "override the recipe's master seed")
        ->each([&](const std::string&) { have_seed = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        // --help / --version exit cleanly; bad arguments are validation errors
        return code == 0 ? 0 : mg::kExitValidation;
    }

    try {
        mg::RunConfig rc = mg::load_config(config_path, &mode);
        if (workers > 0) rc.workers = workers;
        if (!out.empty()) rc.out = out;
        if (have_seed) rc.game.seed = seed;
        rc.validate();
        return mg::run_command(rc);
    } catch (const std::exception& e) {
        std::cerr << "mg-cavity: " << e.what() << "\n";
        return mg::classify_error(e);
    }
}
