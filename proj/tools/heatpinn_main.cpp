#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "heatpinn/io.hpp"

namespace fs = std::filesystem;
using namespace heatpinn;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
    sub->add_option("--config", opts.config_path, "simulation config file (INI)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--set", opts.overrides, "override a config value, section.key=value")
        ->take_all();
    sub->add_option("--seed", opts.seed, "override the run seed");
    sub->add_flag("--quiet", opts.quiet, "suppress progress output");
}

SimulationConfig load_config(const CommonOpts& opts) {
    SimulationConfig cfg = parse_config(opts.config_path);
    for (const auto& ov : opts.overrides) apply_override(cfg, ov);
    if (opts.seed) cfg.seed = *opts.seed;
    cfg.validate();
    return cfg;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> values;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t pos = 0;
            values.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(std::string(what) + ": not a number: '" + item + "'");
        }
    }
    if (values.empty()) throw Error(std::string(what) + ": empty list");
    return values;
}

FieldSource load_source(const std::string& pinn_dir, const std::string& fem_file) {
    if (!pinn_dir.empty() && !fem_file.empty())
        throw Error("give either --pinn or --fem, not both");
    if (!pinn_dir.empty()) return FieldSource(load_pinn_run(pinn_dir));
    if (!fem_file.empty()) return FieldSource(load_fem_solution(fem_file));
    throw Error("one of --pinn or --fem is required");
}

bool strictly_decreasing(const std::vector<SweepRow>& rows, bool pinn) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double prev = pinn ? rows[i - 1].pinn_peak : rows[i - 1].fem_peak;
        const double cur = pinn ? rows[i].pinn_peak : rows[i].fem_peak;
        if (!(cur < prev)) return false;
    }
    return true;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PINN and FEM solvers for 2D transient heat conduction with a moving source"};
    app.require_subcommand(1);

    // run-pinn
    CommonOpts pinn_opts;
    std::string pinn_out;
    auto* run_pinn_cmd = app.add_subcommand("run-pinn", "train the sequential time-window PINN");
    add_common(run_pinn_cmd, pinn_opts);
    run_pinn_cmd->add_option("--out-dir", pinn_out, "output directory")->required();

    // run-fem
    CommonOpts fem_opts;
    std::string fem_out;
    auto* run_fem_cmd = app.add_subcommand("run-fem", "run the FEM reference solver");
    add_common(run_fem_cmd, fem_opts);
    run_fem_cmd->add_option("--out-dir", fem_out, "output directory")->required();

    // profile
    CommonOpts prof_opts;
    std::string prof_pinn, prof_fem, prof_out;
    double prof_t = 0.0;
    int prof_samples = 0;
    auto* profile_cmd = app.add_subcommand("profile", "sample the E-F line profile at a time");
    add_common(profile_cmd, prof_opts);
    profile_cmd->add_option("--pinn", prof_pinn, "PINN run directory");
    profile_cmd->add_option("--fem", prof_fem, "FEM solution file");
    profile_cmd->add_option("--t", prof_t, "sample time (s)")->required();
    profile_cmd->add_option("--out", prof_out, "output CSV file")->required();
    profile_cmd->add_option("--samples", prof_samples, "sample count (default from config)");

    // compare
    CommonOpts cmp_opts;
    std::string cmp_pinn, cmp_fem, cmp_out, cmp_times = "2,4";
    auto* compare_cmd = app.add_subcommand("compare", "PINN-vs-FEM discrepancy metrics");
    add_common(compare_cmd, cmp_opts);
    compare_cmd->add_option("--pinn", cmp_pinn, "PINN run directory")->required();
    compare_cmd->add_option("--fem", cmp_fem, "FEM solution file")->required();
    compare_cmd->add_option("--times", cmp_times, "comma-separated times (s)");
    compare_cmd->add_option("--out-dir", cmp_out, "output directory")->required();

    // export
    CommonOpts exp_opts;
    std::string exp_pinn, exp_fem, exp_out, exp_format = "csv";
    double exp_t = 0.0;
    int exp_nx = 0, exp_ny = 0;
    auto* export_cmd = app.add_subcommand("export", "sample a field on a regular grid");
    add_common(export_cmd, exp_opts);
    export_cmd->add_option("--pinn", exp_pinn, "PINN run directory");
    export_cmd->add_option("--fem", exp_fem, "FEM solution file");
    export_cmd->add_option("--t", exp_t, "sample time (s)")->required();
    export_cmd->add_option("--out", exp_out, "output file")->required();
    export_cmd->add_option("--format", exp_format, "csv or vtk")
        ->check(CLI::IsMember({"csv", "vtk"}));
    export_cmd->add_option("--nx", exp_nx, "grid columns (default from config)");
    export_cmd->add_option("--ny", exp_ny, "grid rows (default from config)");

    // sweep-velocity
    CommonOpts sweep_opts;
    std::string sweep_out, sweep_velocities = "0.5,1,2";
    double probe_x = 10.0, probe_y = 5.0;
    auto* sweep_cmd =
        app.add_subcommand("sweep-velocity", "peak-temperature trend across source velocities");
    add_common(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--out-dir", sweep_out, "output directory")->required();
    sweep_cmd->add_option("--velocities", sweep_velocities, "comma-separated velocities (mm/s)");
    sweep_cmd->add_option("--probe-x", probe_x, "probe x (mm)");
    sweep_cmd->add_option("--probe-y", probe_y, "probe y (mm)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_pinn_cmd->parsed()) {
            const SimulationConfig cfg = load_config(pinn_opts);
            run_pinn(cfg, pinn_out, pinn_opts.quiet);
            if (!pinn_opts.quiet)
                std::fprintf(stderr, "wrote %zu window snapshots to %s\n",
                             cfg.schedule.windows.size(), pinn_out.c_str());
        } else if (run_fem_cmd->parsed()) {
            const SimulationConfig cfg = load_config(fem_opts);
            const FemSolution sol = run_fem(cfg, fem_out, fem_opts.quiet);
            if (!fem_opts.quiet)
                std::fprintf(stderr, "wrote %zu steps (%d nodes) to %s\n", sol.steps.size(),
                             sol.mesh.node_count(), fem_out.c_str());
        } else if (profile_cmd->parsed()) {
            const SimulationConfig cfg = load_config(prof_opts);
            const FieldSource src = load_source(prof_pinn, prof_fem);
            const int n = prof_samples > 0 ? prof_samples : cfg.output.profile_samples;
            const auto prof = extract_line_profile(src, cfg.domain.ef_path, n, prof_t);
            write_profile_csv(prof_out, prof, RunStamp{cfg.hash_hex(), cfg.seed});
        } else if (compare_cmd->parsed()) {
            const SimulationConfig cfg = load_config(cmp_opts);
            const FieldSource pinn(load_pinn_run(cmp_pinn));
            const FieldSource fem(load_fem_solution(cmp_fem));
            const auto times = parse_double_list(cmp_times, "--times");
            const ComparisonReport report = compare(pinn, fem, times, cfg.domain, cfg.output);
            fs::create_directories(cmp_out);
            const RunStamp stamp{cfg.hash_hex(), cfg.seed};
            write_comparison_csv(fs::path(cmp_out) / "compare.csv", report, stamp);
            const std::string summary = comparison_summary(report);
            std::ofstream sum(fs::path(cmp_out) / "summary.txt");
            sum << summary;
            std::cout << summary;
        } else if (export_cmd->parsed()) {
            const SimulationConfig cfg = load_config(exp_opts);
            const FieldSource src = load_source(exp_pinn, exp_fem);
            const int nx = exp_nx > 0 ? exp_nx : cfg.output.grid_nx;
            const int ny = exp_ny > 0 ? exp_ny : cfg.output.grid_ny;
            const RunStamp stamp{cfg.hash_hex(), cfg.seed};
            if (exp_format == "vtk")
                export_field_vtk(exp_out, src, cfg.domain, exp_t, nx, ny, stamp);
            else
                export_field_csv(exp_out, src, cfg.domain, exp_t, nx, ny, stamp);
        } else if (sweep_cmd->parsed()) {
            const SimulationConfig cfg = load_config(sweep_opts);
            const auto velocities = parse_double_list(sweep_velocities, "--velocities");
            const auto rows =
                sweep_velocity(cfg, velocities, probe_x, probe_y, sweep_out, sweep_opts.quiet);
            for (const auto& r : rows)
                std::printf("v = %g mm/s: t_pass = %g s, FEM %.2f K, PINN %.2f K\n", r.velocity,
                            r.t_pass, r.fem_peak, r.pinn_peak);
            const bool fem_ok = strictly_decreasing(rows, false);
            const bool pinn_ok = strictly_decreasing(rows, true);
            std::printf("FEM peak strictly decreasing: %s\n", fem_ok ? "yes" : "NO");
            std::printf("PINN peak strictly decreasing: %s\n", pinn_ok ? "yes" : "NO");
            if (!fem_ok || !pinn_ok) return 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
