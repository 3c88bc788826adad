#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "phnmf/config.hpp"
#include "phnmf/error.hpp"
#include "phnmf/pipeline.hpp"

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

void add_flags(CLI::App* cmd, Flags& flags) {
    cmd->add_option("--config", flags.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", flags.out, "Output directory (overrides output_dir)");
    cmd->add_option("--seed", flags.seed, "NMF seed (overrides nmf.seed)");
    cmd->add_flag("-q,--quiet", flags.quiet, "No progress messages");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Persistent homology + NMF analysis of binary voxel volumes"};
    app.require_subcommand(1);
    Flags flags;

    struct Command {
        const char* name;
        const char* help;
        std::optional<phnmf::Stage> stage;  // nullopt = whole pipeline
    };
    const Command commands[] = {
        {"sdt", "Partition and filter cubes, write signed distance transforms", phnmf::Stage::Sdt},
        {"pd", "Persistence diagrams of every kept cube", phnmf::Stage::Pd},
        {"pi", "Fit grids, write persistence images and concatenated vectors", phnmf::Stage::Pi},
        {"nmf", "Factorize the concatenated vectors", phnmf::Stage::Nmf},
        {"invert", "Locate pairs in each feature distribution's high-mass region", phnmf::Stage::Invert},
        {"plot", "Coefficient scatters and feature heatmaps", phnmf::Stage::Plot},
        {"pipeline", "All stages in order", std::nullopt},
    };
    std::vector<std::pair<CLI::App*, std::optional<phnmf::Stage>>> subs;
    for (const auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        add_flags(sub, flags);
        subs.emplace_back(sub, c.stage);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        phnmf::RunConfig cfg = phnmf::load_config(flags.config);
        if (!flags.out.empty()) cfg.output_dir = std::filesystem::absolute(flags.out);
        if (flags.seed) cfg.nmf.seed = *flags.seed;
        std::ostream* log = flags.quiet ? nullptr : &std::cerr;
        for (const auto& [sub, stage] : subs) {
            if (!sub->parsed()) continue;
            if (stage)
                phnmf::run_stage(cfg, *stage, log);
            else
                phnmf::run_pipeline(cfg, log);
        }
    } catch (const phnmf::StageError& e) {
        std::cerr << "phnmf: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "phnmf: [config] " << e.what() << '\n';
        return 1;
    }
    return 0;
}
