#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fxtda/common.hpp"
#include "fxtda/eval.hpp"
#include "fxtda/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct Overrides {
    std::string config;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

fxtda::PipelineConfig load(const Overrides& o) {
    auto c = fxtda::load_config(o.config);
    if (!o.output.empty()) c.output_dir = o.output;
    if (o.seed) c.seed = *o.seed;
    if (o.threads) c.threads = *o.threads;
    c.validate();
    return c;
}

void add_common(CLI::App* cmd, Overrides& o, bool needs_config) {
    auto* opt = cmd->add_option("--config", o.config, "JSON configuration file");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    cmd->add_option("--output", o.output, "report directory (overrides output_dir)");
    cmd->add_option("--seed", o.seed, "k-means seed");
    cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
}

void print_evaluation(const fxtda::EvaluationReport& report) {
    fxtda::write_evaluation_csv(std::cout, report);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Statistical versus topological clustering of FX reference rates"};
    app.require_subcommand(1);
    Overrides o;

    auto* run = app.add_subcommand("run", "full pipeline: ingest, features, clustering, evaluation, plots");
    add_common(run, o, true);
    auto* sens = app.add_subcommand("sensitivity", "TDA parameter sensitivity grid only");
    add_common(sens, o, true);
    auto* plot = app.add_subcommand("plot", "render SVG figures from an existing report directory");
    add_common(plot, o, false);
    auto* check = app.add_subcommand("validate-config", "parse and validate a configuration");
    add_common(check, o, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const auto config = load(o);
            const auto result = fxtda::run_pipeline(config);
            const auto& warnings = result.data.warnings;
            for (std::size_t i = 0; i < std::min<std::size_t>(warnings.size(), 10); ++i) {
                std::cerr << "warning: " << warnings[i] << '\n';
            }
            if (warnings.size() > 10) {
                std::cerr << "warning: ... " << warnings.size() - 10 << " more in panels/ingest_warnings.txt\n";
            }
            for (const auto& n : result.notes) std::cerr << "note: " << n << '\n';
            print_evaluation(result.evaluation);
            std::cerr << "report written to " << result.output_dir.string() << '\n';
        } else if (sens->parsed()) {
            auto config = load(o);
            if (config.sensitivity_grid.empty()) config.sensitivity_grid = fxtda::default_sensitivity_grid();
            const auto report = fxtda::run_sensitivity(config);
            const fs::path out = config.output_dir / "sensitivity" / "sensitivity_report.csv";
            fs::create_directories(out.parent_path());
            std::ofstream file(out, std::ios::binary);
            fxtda::write_sensitivity_csv(file, report);
            if (!file) throw fxtda::Error(fxtda::ErrorKind::Io, "[cli] cannot write " + out.string());
            fxtda::write_sensitivity_csv(std::cout, report);
        } else if (plot->parsed()) {
            fs::path dir = o.output;
            if (dir.empty()) {
                if (o.config.empty()) throw fxtda::Error(fxtda::ErrorKind::Config, "[cli] plot needs --output or --config");
                dir = load(o).output_dir;
            }
            fxtda::render_plots(dir);
            std::cerr << "plots written below " << dir.string() << '\n';
        } else if (check->parsed()) {
            const auto config = load(o);
            std::cout << fxtda::config_to_json(config) << '\n';
        }
    } catch (const fxtda::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: [cli] " << e.what() << '\n';
        return 2;
    }
    return 0;
}
