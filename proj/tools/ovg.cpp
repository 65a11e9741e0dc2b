// Command-line front end: config init, generate, ground, grasp, ablate, report.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "ovg/commands.hpp"
#include "ovg/config.hpp"

namespace {

int config_init(const std::string& path, bool force) {
    if (std::filesystem::exists(path) && !force) {
        std::fprintf(stderr, "%s already exists (use --force to overwrite)\n", path.c_str());
        return 1;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        std::fprintf(stderr, "cannot write %s\n", path.c_str());
        return 1;
    }
    f << ovg::default_config_text() << "\n";
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"open-vocabulary grasping pipeline on a synthetic tabletop world"};
    app.require_subcommand(1);

    std::string config_path = "ovg.json";
    bool force = false;

    CLI::App* config_cmd = app.add_subcommand("config", "configuration utilities");
    CLI::App* init_cmd = config_cmd->add_subcommand("init", "write the annotated default config");
    init_cmd->add_option("--path", config_path, "where to write the config")
        ->capture_default_str();
    init_cmd->add_flag("--force", force, "overwrite an existing file");

    const auto add_pipeline_cmd = [&](const char* name, const char* help) {
        CLI::App* cmd = app.add_subcommand(name, help);
        cmd->add_option("--config", config_path, "config file")->capture_default_str();
        return cmd;
    };
    CLI::App* generate_cmd = add_pipeline_cmd("generate", "generate scene suites and sample assets");
    CLI::App* ground_cmd = add_pipeline_cmd("ground", "run grounding over the generated suites");
    CLI::App* grasp_cmd = add_pipeline_cmd("grasp", "run the grasp attempt protocol");
    CLI::App* ablate_cmd = add_pipeline_cmd("ablate", "toggle the alignment stages and re-measure");
    CLI::App* report_cmd = add_pipeline_cmd("report", "write report.md and re-check invariants");

    CLI11_PARSE(app, argc, argv);

    try {
        if (init_cmd->parsed()) return config_init(config_path, force);

        const ovg::RunConfig cfg = ovg::load_config(config_path);
        const std::string dir = ovg::resolve_output_dir(cfg);
        if (generate_cmd->parsed()) {
            ovg::run_generate(cfg);
            std::printf("generated suites in %s\n", dir.c_str());
        } else if (ground_cmd->parsed()) {
            ovg::run_ground(cfg);
            std::printf("grounding records in %s\n", dir.c_str());
        } else if (grasp_cmd->parsed()) {
            ovg::run_grasp(cfg);
            std::printf("grasp outcomes in %s\n", dir.c_str());
        } else if (ablate_cmd->parsed()) {
            ovg::run_ablate(cfg);
            std::printf("ablation rows in %s/ablation.jsonl\n", dir.c_str());
        } else if (report_cmd->parsed()) {
            if (!ovg::run_report(cfg)) {
                std::fprintf(stderr, "report written, but invariants were violated\n");
                return 2;
            }
            std::printf("report in %s/report.md\n", dir.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
