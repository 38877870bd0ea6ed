// Operator entry point: gen-data | train | forecast | grid-services | report.
// Exit codes: 0 success, 2 config error, 3 data error, 4 divergence.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fedgrid/errors.hpp"
#include "fedgrid/log.hpp"
#include "fedgrid/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_override;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Experiment config JSON")->required();
    cmd->add_option("--seed", args.seed, "Override the config seed");
    cmd->add_option("--out", args.out_override, "Override the output directory");
    cmd->add_flag("--quiet", args.quiet, "Suppress progress output");
}

fedgrid::ExperimentConfig load_config(const CommonArgs& args) {
    fedgrid::ExperimentConfig cfg = fedgrid::ExperimentConfig::load(args.config_path);
    if (args.seed) cfg.topology.seed = *args.seed;
    if (!args.out_override.empty()) cfg.paths.out = args.out_override;
    return cfg;
}

int run(const std::string& command, const CommonArgs& args) {
    fedgrid::set_log_level(args.quiet ? fedgrid::LogLevel::Quiet : fedgrid::log_level_from_env());
    try {
        fedgrid::ExperimentConfig cfg = load_config(args);
        if (command == "gen-data") {
            fedgrid::run_gen_data(cfg);
        } else if (command == "train") {
            auto s = fedgrid::run_train(cfg);
            if (!args.quiet)
                std::cout << "trained " << s.rounds << " rounds (" << to_string(s.stop_reason)
                          << "), loss " << s.round1_loss << " -> " << s.final_loss << "\n";
        } else if (command == "forecast") {
            auto s = fedgrid::run_forecast(cfg);
            if (!args.quiet) std::cout << s.records << " forecast records -> " << s.path << "\n";
        } else if (command == "grid-services") {
            auto s = fedgrid::run_grid_services(cfg);
            if (!args.quiet)
                std::cout << "P_T " << s.swing_threshold_kw << " kW, cap " << s.shave_cap_kw
                          << " kW, swings " << s.swings_before << " -> " << s.swings_after
                          << " (" << s.commands << " commands)\n";
        } else if (command == "report") {
            auto s = fedgrid::run_report(cfg);
            if (!args.quiet)
                std::cout << "fleet RMSE " << s.fleet_mean_rmse << " kW over " << s.nodes
                          << " nodes -> " << s.path << "\n";
        }
        return 0;
    } catch (const fedgrid::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const fedgrid::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 4;
    } catch (const fedgrid::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated short-term load forecasting and grid services"};
    app.require_subcommand(1);

    const char* names[] = {"gen-data", "train", "forecast", "grid-services", "report"};
    const char* descriptions[] = {
        "Generate the synthetic feeder CSV",
        "Run federated training and persist the global model",
        "One-step-ahead forecasts for the test horizon",
        "Swing detection/prediction, peak shaving, reports",
        "Per-node and fleet RMSE report",
    };
    CommonArgs args[5];
    for (int i = 0; i < 5; ++i) add_common(app.add_subcommand(names[i], descriptions[i]), args[i]);

    CLI11_PARSE(app, argc, argv);

    for (int i = 0; i < 5; ++i) {
        if (app.get_subcommand(names[i])->parsed()) return run(names[i], args[i]);
    }
    return 2;
}
