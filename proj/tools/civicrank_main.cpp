#include "civicrank/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"civicrank: civic value labelling and re-ranking pipeline"};
    std::string command;
    std::string config_path = "config.json";
    bool offline = false;
    std::string fixtures;

    std::vector<std::string> names(std::begin(civicrank::kCommands), std::end(civicrank::kCommands));
    app.add_option("command", command, "Pipeline stage to run")->required()->check(CLI::IsMember(names));
    app.add_option("--config", config_path, "Path to config.json");
    app.add_flag("--offline", offline, "Read Wikipedia responses from recorded fixtures only");
    app.add_option("--fixtures", fixtures, "Fixture directory for offline mode");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    civicrank::PipelineConfig cfg;
    try {
        cfg = civicrank::PipelineConfig::load(config_path);
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", "bad_config"}, {"detail", e.what()}}.dump() << std::endl;
        return civicrank::exit_code_for(e);
    }
    if (offline) cfg.offline = true;
    if (!fixtures.empty()) cfg.fixtures_dir = fixtures;
    return civicrank::run_command(command, cfg, std::cout, std::cerr);
}
