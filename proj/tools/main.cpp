// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mploc/pipeline.hpp"
#include "mploc/scenario.hpp"

namespace {

// Exit codes by error category: 2 usage, 3 io/parse, 4 validation, 5 runtime.
constexpr int exit_usage = 2;
constexpr int exit_io = 3;
constexpr int exit_validation = 4;
constexpr int exit_runtime = 5;

void print_warnings(const mploc::ValidationReport& report) {
    for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
}

int load_or_fail(const std::string& path, mploc::Scenario& out) {
    mploc::ValidationReport report;
    try {
        out = mploc::load_scenario(path, &report);
    } catch (const std::exception& e) {
        print_warnings(report);
        if (report.errors.empty()) {
            std::cerr << "error: io: " << e.what() << "\n";
            return exit_io;
        }
        for (const std::string& msg : report.errors) {
            std::cerr << "error: validation: " << msg << "\n";
        }
        return exit_validation;
    }
    print_warnings(report);
    return 0;
}

int do_run(const std::string& path, const std::string& out_dir, int runs_override,
           bool has_seed, std::uint64_t seed_override, int threads) {
    mploc::Scenario scenario;
    if (const int rc = load_or_fail(path, scenario); rc != 0) return rc;
    if (runs_override > 0) scenario.runs = runs_override;
    if (has_seed) scenario.seed = seed_override;

    const mploc::RunReport report = mploc::run_scenario(scenario, threads);
    mploc::write_report(report, out_dir);

    std::cout << std::fixed << std::setprecision(4) << "runs=" << report.runs
              << " steps=" << report.steps << " rmse=" << report.summary.rmse
              << " p50=" << report.summary.p50 << " p90=" << report.summary.p90
              << " p95=" << report.summary.p95
              << " wrong_assoc=" << report.summary.wrong_association_rate
              << " clutter=" << report.summary.clutter_rate << " out=" << out_dir << "\n";
    return 0;
}

int do_validate(const std::string& path) {
    const mploc::ValidationReport report = mploc::validate_scenario(path);
    print_warnings(report);
    if (!report.ok()) {
        for (const std::string& msg : report.errors) {
            std::cerr << "error: validation: " << msg << "\n";
        }
        return exit_validation;
    }
    mploc::Scenario scenario;
    if (const int rc = load_or_fail(path, scenario); rc != 0) return rc;
    std::cout << "ok: " << path << " (walls=" << scenario.plan.walls().size()
              << " anchors=" << scenario.pas.size() << " steps=" << scenario.trajectory.size()
              << " runs=" << scenario.runs << ")\n";
    return 0;
}

int do_vas(const std::string& path) {
    mploc::Scenario scenario;
    if (const int rc = load_or_fail(path, scenario); rc != 0) return rc;

    std::cout << "pa,id,kind,order,x,y,walls\n" << std::fixed << std::setprecision(6);
    for (std::size_t j = 0; j < scenario.pas.size(); ++j) {
        for (const mploc::Anchor& a : mploc::scenario_anchors(scenario, j)) {
            std::string walls;
            for (const std::string& w : a.wall_sequence) {
                if (!walls.empty()) walls += '+';
                walls += w;
            }
            std::cout << scenario.pas[j].id << ',' << a.id << ','
                      << (a.is_physical() ? "PA" : "VA") << ',' << a.order << ','
                      << a.position.x() << ',' << a.position.y() << ',' << walls << '\n';
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multipath-assisted indoor localization and tracking simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = "out";
    int runs_override = 0;
    std::uint64_t seed_override = 0;
    int threads = 0;

    CLI::App* run_cmd = app.add_subcommand("run", "Run Monte-Carlo and write CSV reports");
    run_cmd->add_option("scenario", scenario_path, "Scenario file (JSON)")->required();
    run_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run_cmd->add_option("--runs", runs_override, "Override the Monte-Carlo run count")
        ->check(CLI::PositiveNumber);
    CLI::Option* seed_opt =
        run_cmd->add_option("--seed", seed_override, "Override the master seed");
    run_cmd->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

    CLI::App* val_cmd = app.add_subcommand("validate", "Validate a scenario file");
    val_cmd->add_option("scenario", scenario_path, "Scenario file (JSON)")->required();

    CLI::App* vas_cmd = app.add_subcommand("vas", "Print the generated virtual-anchor table");
    vas_cmd->add_option("scenario", scenario_path, "Scenario file (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::cerr << "error: usage: " << e.what() << "\n";
        return exit_usage;
    }

    try {
        if (run_cmd->parsed()) {
            return do_run(scenario_path, out_dir, runs_override, seed_opt->count() > 0,
                          seed_override, threads);
        }
        if (val_cmd->parsed()) return do_validate(scenario_path);
        if (vas_cmd->parsed()) return do_vas(scenario_path);
        std::cerr << "error: usage: no subcommand\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << "\n";
        return exit_runtime;
    }
}
