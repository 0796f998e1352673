#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vispol/errors.hpp"
#include "vispol/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"media-slant simulation and measurement laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;

    for (const char* name :
         {"simulate", "measure", "baseline", "validate", "report"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config (JSON)")
            ->required();
        sub->add_option("--out", out_dir, "output directory override");
        sub->add_option("--seed", seed, "global seed override")
            ->each([&](const std::string&) { seed_given = true; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        vispol::ExperimentConfig cfg = vispol::ExperimentConfig::load(config_path);
        if (seed_given) cfg.seed = seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        return vispol::run_command(app.get_subcommands().front()->get_name(), cfg);
    } catch (const vispol::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const vispol::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
