#include <charconv>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "comove/report/config.hpp"
#include "comove/report/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitInvalid = 2;

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto t = comove::detail::trim(item);
        double v = 0.0;
        auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || end != t.data() + t.size())
            throw comove::ConfigError("--sweep: '" + item + "' is not a number");
        grid.push_back(v);
    }
    if (grid.empty()) throw comove::ConfigError("--sweep: grid must not be empty");
    return grid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Co-movement, change-point and herding analysis of equity return panels"};
    app.set_version_flag("--version", std::string(comove::kVersion));
    app.require_subcommand(1);

    std::string config_path, out_dir, stage_name, sweep;
    auto* run = app.add_subcommand("run", "Run the analysis pipeline");
    run->add_option("--config", config_path, "JSON configuration file")->required();
    run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    run->add_option("--stage", stage_name, "Run one stage: describe, tests, dependence, cpd, herding, sensitivity, plots");
    run->add_option("--sweep", sweep, "Comma-separated penalty values for the change-point sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInvalid;
    }

    auto progress = [](const std::string& line) { std::cerr << line << '\n'; };
    try {
        auto cfg = comove::report::load_config(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (!sweep.empty()) cfg.cpd.sweep = parse_grid(sweep);

        comove::report::ReportBundle bundle;
        if (!stage_name.empty()) {
            auto stage = comove::report::parse_stage(stage_name);
            if (!stage) throw comove::ConfigError("--stage: unknown stage '" + stage_name + "'");
            bundle = comove::report::run_stage(cfg, *stage, progress);
        } else {
            bundle = comove::report::run_all(cfg, progress);
        }
        std::cerr << "wrote " << bundle.files.size() + 1 << " files to " << bundle.output_dir << '\n';
        return bundle.complete() ? kExitOk : kExitPartial;
    } catch (const comove::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitPartial;
    }
}
