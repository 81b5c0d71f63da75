#include <fstream>
#include <iostream>
#include <memory>
#include <type_traits>

#include "CLI11.hpp"
#include "commands.hpp"
#include "plapflow/error.hpp"

namespace {

using plapflow::cli::RunConfig;
using plapflow::cli::Scenario;

std::string dashed(std::string key) {
    for (char& ch : key) {
        if (ch == '_') ch = '-';
    }
    return key;
}

struct Command {
    CLI::App* app = nullptr;
    Scenario scenario{};
    RunConfig parsed;
    std::string config_file;
    bool print_config = false;
};

RunConfig resolve(const Command& cmd) {
    RunConfig cfg = RunConfig::defaults(cmd.scenario);
    if (!cmd.config_file.empty()) {
        std::ifstream in(cmd.config_file);
        if (!in) throw plapflow::InvalidParameter("cannot read config file " + cmd.config_file);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw plapflow::InvalidParameter("config file " + cmd.config_file + ": " + e.what());
        }
        // A manifest written by a previous run carries the config under "config".
        if (j.is_object() && j.contains("config") && j.contains("version")) j = j.at("config");
        cfg = plapflow::cli::from_json(j, cfg);
        if (cfg.scenario != cmd.scenario) {
            throw plapflow::InvalidParameter("config file is for scenario '" + to_string(cfg.scenario) + "'");
        }
    }

    nlohmann::json given = nlohmann::json::object();
    RunConfig parsed = cmd.parsed;
    plapflow::cli::visit_fields(parsed, [&](const char* key, auto& field) {
        if (cmd.app->get_option("--" + dashed(key))->count() > 0) given[key] = field;
    });
    if (cfg.paper_scale || given.contains("paper_scale")) cfg.apply_paper_scale();
    cfg = plapflow::cli::from_json(given, cfg);
    cfg.scenario = cmd.scenario;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive network formation and p-Laplacian relaxation solver"};
    app.require_subcommand(1);

    const std::pair<const char*, Scenario> names[] = {
        {"network-formation", Scenario::NetworkFormation},
        {"plap", Scenario::Plap},
        {"convergence", Scenario::Convergence},
        {"tc6", Scenario::Tc6Sweep},
        {"discrete", Scenario::DiscreteStudy},
    };
    const char* descriptions[] = {
        "Gaussian-source network formation on the unit square (pure Neumann)",
        "single p-Laplacian test case run to steady state",
        "convergence study of a test case over refinement levels",
        "L-shape robustness sweep over p with S = 2",
        "graph-model studies: qz-gap, xx-identity, energy-identity, energy-gap, mass-balance, source-bound, refinement, flow",
    };

    std::vector<std::unique_ptr<Command>> commands;
    for (std::size_t i = 0; i < std::size(names); ++i) {
        auto cmd = std::make_unique<Command>();
        cmd->scenario = names[i].second;
        cmd->parsed = RunConfig::defaults(cmd->scenario);
        cmd->app = app.add_subcommand(names[i].first, descriptions[i]);
        cmd->app->add_option("--config", cmd->config_file, "JSON config or manifest to start from");
        cmd->app->add_flag("--print-config", cmd->print_config, "print the effective config as JSON and exit");
        plapflow::cli::visit_fields(cmd->parsed, [&](const char* key, auto& field) {
            using T = std::decay_t<decltype(field)>;
            const std::string flag = "--" + dashed(key);
            if constexpr (std::is_same_v<T, bool>) {
                if (std::string(key) == "paper_scale") {
                    cmd->app->add_flag(flag, field, "full-size mesh and horizon");
                    return;
                }
            }
            cmd->app->add_option(flag, field, key)->capture_default_str();
        });
        commands.push_back(std::move(cmd));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? plapflow::cli::kOk : plapflow::cli::kInvalidInput;
    }

    for (const auto& cmd : commands) {
        if (!cmd->app->parsed()) continue;
        RunConfig cfg;
        try {
            cfg = resolve(*cmd);
            cfg.validate();
        } catch (const plapflow::Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return plapflow::cli::kInvalidInput;
        }
        if (cmd->print_config) {
            std::cout << plapflow::cli::to_json(cfg).dump(2) << '\n';
            return plapflow::cli::kOk;
        }
        return plapflow::cli::run(cfg, std::cout, std::cerr);
    }
    return plapflow::cli::kInvalidInput;
}
