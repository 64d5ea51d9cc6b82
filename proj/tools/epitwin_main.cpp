#include "epitwin/cli/commands.hpp"
#include "epitwin/util/error.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>

int main(int argc, char** argv)
{
    using namespace epitwin;

    CLI::App app{"epitwin: neural-integrated mechanistic epidemic digital twins\n\n" +
                 cli::config_reference()};
    app.require_subcommand(1);

    struct Common {
        std::string config;
        std::string out = "out";
        std::optional<std::uint64_t> seed;
    };

    auto add_command = [&](const char* name, const char* desc, auto fn) {
        auto* sub = app.add_subcommand(name, desc);
        auto common = std::make_shared<Common>();
        sub->add_option("--config", common->config, "run config file (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", common->out, "artifact directory [out]");
        sub->add_option("--seed", common->seed, "override the config seed");
        sub->callback([common, fn] {
            cli::RunConfig cfg = cli::load_config(common->config);
            if (common->seed)
                cfg.seed = *common->seed;
            fn(cfg, std::filesystem::path(common->out));
        });
        return sub;
    };

    add_command("synth", "generate a synthetic scenario dataset with hidden truth",
                cli::cmd_synth);
    add_command("simulate", "run a model over a parameter field and export the trajectory",
                cli::cmd_simulate);
    add_command("calibrate", "fit the calibration network to a dataset", cli::cmd_calibrate);
    add_command("evaluate", "rolling-origin forecast evaluation", cli::cmd_evaluate);
    add_command("evolve", "self-evolving model search over the DSL", cli::cmd_evolve);
    add_command("intervene", "counterfactual transmission-reduction sweep", cli::cmd_intervene);

    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.code() == Errc::config_error ? 1 : 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
