#include "heatpinn/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace heatpinn {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string stamp_line(const RunStamp& stamp) {
    return "# config_hash=" + stamp.config_hash + " seed=" + std::to_string(stamp.seed) + "\n";
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary); // binary: byte-stable newlines
    if (!out) throw Error("cannot open output file: " + path.string());
    return out;
}

std::string window_base(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%03d", index);
    return buf;
}

} // namespace

FieldSource::FieldSource(std::vector<WindowSnapshot> snapshots)
    : snapshots_(std::move(snapshots)) {
    if (snapshots_.empty()) throw Error("FieldSource: no snapshots");
}

FieldSource::FieldSource(FemSolution fem) : fem_(std::move(fem)), is_fem_(true) {
    if (fem_.steps.empty()) throw Error("FieldSource: empty FEM solution");
}

double FieldSource::value(const SpaceTimePoint& p) const {
    return is_fem_ ? interpolate(fem_, p) : query(snapshots_, p);
}

double FieldSource::t_end() const {
    return is_fem_ ? fem_.t_end() : snapshots_.back().t1;
}

const std::vector<WindowSnapshot>* FieldSource::snapshots() const {
    return is_fem_ ? nullptr : &snapshots_;
}

const FemSolution* FieldSource::fem() const { return is_fem_ ? &fem_ : nullptr; }

std::vector<ProfileSample> extract_line_profile(const FieldSource& src, const Segment& path, int n,
                                                double t) {
    if (n < 2) throw Error("extract_line_profile: need at least 2 samples");
    const double len = path.length();
    std::vector<ProfileSample> prof(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double s = len * static_cast<double>(i) / static_cast<double>(n - 1);
        const auto xy = path.at(s);
        prof[i] = {s, src.value({xy[0], xy[1], t})};
    }
    return prof;
}

ComparisonReport compare(const FieldSource& pinn, const FieldSource& fem,
                         const std::vector<double>& times, const DomainSpec& d,
                         const OutputSettings& out) {
    if (times.empty()) throw Error("compare: no times requested");
    ComparisonReport report;
    for (double t : times) {
        if (t < 0.0 || t > pinn.t_end() + 1e-9 || t > fem.t_end() + 1e-9)
            throw Error("compare: t = " + fmt(t) + " outside a solution's range");
        ComparisonRow row;
        row.t = t;

        double num = 0.0, den = 0.0, linf = 0.0;
        for (int j = 0; j < out.grid_ny; ++j)
            for (int i = 0; i < out.grid_nx; ++i) {
                const double x = d.length * i / (out.grid_nx - 1);
                const double y = d.width * j / (out.grid_ny - 1);
                const double up = pinn.value({x, y, t});
                const double uf = fem.value({x, y, t});
                num += (up - uf) * (up - uf);
                den += uf * uf;
                linf = std::max(linf, std::abs(up - uf));
            }
        row.grid_l2_rel = std::sqrt(num / den);
        row.grid_linf = linf;

        const auto prof_p = extract_line_profile(pinn, d.ef_path, out.profile_samples, t);
        const auto prof_f = extract_line_profile(fem, d.ef_path, out.profile_samples, t);
        double pnum = 0.0, pden = 0.0, peak_p = prof_p[0].u, peak_f = prof_f[0].u;
        for (std::size_t i = 0; i < prof_p.size(); ++i) {
            const double diff = prof_p[i].u - prof_f[i].u;
            pnum += diff * diff;
            pden += prof_f[i].u * prof_f[i].u;
            peak_p = std::max(peak_p, prof_p[i].u);
            peak_f = std::max(peak_f, prof_f[i].u);
        }
        row.profile_l2_rel = std::sqrt(pnum / pden);
        row.peak_pinn = peak_p;
        row.peak_fem = peak_f;
        row.peak_rel_err = std::abs(peak_p - peak_f) / std::abs(peak_f);
        report.rows.push_back(row);
    }
    return report;
}

void write_profile_csv(const std::filesystem::path& path, const std::vector<ProfileSample>& prof,
                       const RunStamp& stamp) {
    auto out = open_out(path);
    out << stamp_line(stamp) << "s_mm,temperature_K\n";
    for (const auto& s : prof) out << fmt(s.s) << ',' << fmt(s.u) << '\n';
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& history,
                    int window_index, const RunStamp& stamp) {
    auto out = open_out(path);
    out << "# config_hash=" << stamp.config_hash << " seed=" << stamp.seed
        << " window=" << window_index << "\n";
    out << "epoch,L_ic,L_bc,L_r,total\n";
    for (const auto& r : history)
        out << r.epoch << ',' << fmt(r.ic) << ',' << fmt(r.bc) << ',' << fmt(r.residual) << ','
            << fmt(r.total) << '\n';
}

void write_comparison_csv(const std::filesystem::path& path, const ComparisonReport& report,
                          const RunStamp& stamp) {
    auto out = open_out(path);
    out << stamp_line(stamp)
        << "t_s,grid_l2_rel,grid_linf_K,profile_l2_rel,peak_pinn_K,peak_fem_K,peak_rel_err\n";
    for (const auto& r : report.rows)
        out << fmt(r.t) << ',' << fmt(r.grid_l2_rel) << ',' << fmt(r.grid_linf) << ','
            << fmt(r.profile_l2_rel) << ',' << fmt(r.peak_pinn) << ',' << fmt(r.peak_fem) << ','
            << fmt(r.peak_rel_err) << '\n';
}

std::string comparison_summary(const ComparisonReport& report) {
    std::ostringstream out;
    for (const auto& r : report.rows) {
        char line[256];
        std::snprintf(line, sizeof(line),
                      "t = %6.3f s: grid L2 rel %.4f, grid Linf %.2f K, profile L2 rel %.4f, "
                      "peak %.2f K vs %.2f K (rel err %.4f)\n",
                      r.t, r.grid_l2_rel, r.grid_linf, r.profile_l2_rel, r.peak_pinn, r.peak_fem,
                      r.peak_rel_err);
        out << line;
    }
    return out.str();
}

void export_field_csv(const std::filesystem::path& path, const FieldSource& src,
                      const DomainSpec& d, double t, int nx, int ny, const RunStamp& stamp) {
    if (nx < 2 || ny < 2) throw Error("export_field_csv: grid must be at least 2x2");
    auto out = open_out(path);
    out << stamp_line(stamp) << "x_mm,y_mm,t_s,u_K\n";
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double x = d.length * i / (nx - 1);
            const double y = d.width * j / (ny - 1);
            out << fmt(x) << ',' << fmt(y) << ',' << fmt(t) << ','
                << fmt(src.value({x, y, t})) << '\n';
        }
}

void export_field_vtk(const std::filesystem::path& path, const FieldSource& src,
                      const DomainSpec& d, double t, int nx, int ny, const RunStamp& stamp) {
    if (nx < 2 || ny < 2) throw Error("export_field_vtk: grid must be at least 2x2");
    auto out = open_out(path);
    out << "# vtk DataFile Version 3.0\n";
    out << "temperature t_s=" << fmt(t) << " config_hash=" << stamp.config_hash
        << " seed=" << stamp.seed << "\n";
    out << "ASCII\nDATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << nx << ' ' << ny << " 1\n";
    out << "ORIGIN 0 0 0\n";
    out << "SPACING " << fmt(d.length / (nx - 1)) << ' ' << fmt(d.width / (ny - 1)) << " 1\n";
    out << "POINT_DATA " << nx * ny << "\n";
    out << "SCALARS temperature_K double 1\nLOOKUP_TABLE default\n";
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double x = d.length * i / (nx - 1);
            const double y = d.width * j / (ny - 1);
            out << fmt(src.value({x, y, t})) << '\n';
        }
}

void save_fem_solution(const std::filesystem::path& path, const FemSolution& sol,
                       const RunStamp& stamp) {
    nlohmann::json header;
    header["format"] = "heatpinn-fem-v1";
    header["nx"] = sol.mesh.nx;
    header["ny"] = sol.mesh.ny;
    header["hx"] = sol.mesh.hx;
    header["hy"] = sol.mesh.hy;
    header["dt"] = sol.dt;
    header["steps"] = sol.steps.size();
    header["nodes"] = sol.mesh.node_count();
    header["config_hash"] = stamp.config_hash;
    header["seed"] = stamp.seed;

    auto out = open_out(path);
    out << header.dump() << '\n';
    for (const auto& u : sol.steps)
        out.write(reinterpret_cast<const char*>(u.data()),
                  static_cast<std::streamsize>(u.size() * sizeof(double)));
    if (!out) throw Error("failed writing FEM solution: " + path.string());
}

FemSolution load_fem_solution(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open FEM solution: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error("FEM solution missing header: " + path.string());
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error("FEM solution header is not valid JSON: " + std::string(e.what()));
    }
    if (header.value("format", "") != "heatpinn-fem-v1")
        throw Error("unsupported FEM solution format in " + path.string());

    FemSolution sol;
    sol.mesh = build_structured_mesh(header.at("nx").get<int>(), header.at("ny").get<int>(),
                                     header.at("hx").get<double>(), header.at("hy").get<double>());
    sol.dt = header.at("dt").get<double>();
    const std::size_t steps = header.at("steps").get<std::size_t>();
    const int nodes = header.at("nodes").get<int>();
    if (nodes != sol.mesh.node_count())
        throw Error("FEM solution node count does not match its grid");
    sol.steps.resize(steps, Eigen::VectorXd(nodes));
    for (auto& u : sol.steps) {
        in.read(reinterpret_cast<char*>(u.data()),
                static_cast<std::streamsize>(static_cast<std::size_t>(nodes) * sizeof(double)));
        if (static_cast<std::size_t>(in.gcount()) != static_cast<std::size_t>(nodes) * sizeof(double))
            throw Error("FEM solution payload truncated: " + path.string());
    }
    return sol;
}

std::vector<WindowSnapshot> run_pinn(const SimulationConfig& cfg,
                                     const std::filesystem::path& out_dir, bool quiet) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    const RunStamp stamp{cfg.hash_hex(), cfg.seed};

    TrainSetup setup = cfg.train_setup();
    if (!quiet)
        setup.progress = [](int window, const LossRecord& r) {
            std::fprintf(stderr, "[window %d] epoch %6d  L_ic=%.3e L_bc=%.3e L_r=%.3e total=%.3e\n",
                         window, r.epoch, r.ic, r.bc, r.residual, r.total);
        };

    nlohmann::json manifest;
    manifest["format"] = "heatpinn-run-v1";
    manifest["config_hash"] = stamp.config_hash;
    manifest["seed"] = stamp.seed;
    manifest["config"] = cfg.canonical_dump();
    manifest["windows"] = nlohmann::json::array();

    const auto write_manifest = [&] {
        auto out = open_out(out_dir / "manifest.json");
        out << manifest.dump(2) << '\n';
    };

    std::vector<WindowSnapshot> snapshots;
    const PhaseCallback on_phase = [&](const WindowSnapshot& snap, const TrainResult& res) {
        const std::string base = window_base(snap.index);
        const std::string snap_name = "window_" + base + ".snap";
        const std::string loss_name = "loss_window_" + base + ".csv";
        save_snapshot(out_dir / snap_name, snap);
        write_loss_csv(out_dir / loss_name, res.history, snap.index, stamp);
        manifest["windows"].push_back({{"index", snap.index},
                                       {"t0", snap.t0},
                                       {"t1", snap.t1},
                                       {"snapshot", snap_name},
                                       {"loss_csv", loss_name}});
        write_manifest(); // keep the manifest in sync so partial runs stay loadable
        if (!quiet)
            std::fprintf(stderr, "window %d [%g, %g] s done: total loss %.3e\n", snap.index,
                         snap.t0, snap.t1, snap.loss_total);
    };

    snapshots = run_sequential(setup, cfg.seed, on_phase);
    return snapshots;
}

std::vector<WindowSnapshot> load_pinn_run(const std::filesystem::path& run_dir) {
    const auto manifest_path = run_dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw Error("cannot open run manifest: " + manifest_path.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw Error("run manifest is not valid JSON: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "heatpinn-run-v1")
        throw Error("unsupported run manifest format in " + manifest_path.string());
    std::vector<WindowSnapshot> snapshots;
    for (const auto& w : manifest.at("windows"))
        snapshots.push_back(load_snapshot(run_dir / w.at("snapshot").get<std::string>()));
    if (snapshots.empty()) throw Error("run manifest lists no windows");
    std::sort(snapshots.begin(), snapshots.end(),
              [](const WindowSnapshot& a, const WindowSnapshot& b) { return a.index < b.index; });
    return snapshots;
}

FemSolution run_fem(const SimulationConfig& cfg, const std::filesystem::path& out_dir,
                    bool quiet) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    const RunStamp stamp{cfg.hash_hex(), cfg.seed};

    StepCallback on_step;
    if (!quiet)
        on_step = [](int step, int nsteps) {
            if (step % 50 == 0 || step == nsteps)
                std::fprintf(stderr, "fem step %d/%d\n", step, nsteps);
        };

    const FemSolution sol = solve_heat(cfg.domain, cfg.material, cfg.source, cfg.fem,
                                       cfg.schedule.t_total, cfg.initial_temperature, on_step);
    save_fem_solution(out_dir / "fem.solution", sol, stamp);
    return sol;
}

std::vector<SweepRow> sweep_velocity(const SimulationConfig& base,
                                     const std::vector<double>& velocities, double probe_x,
                                     double probe_y, const std::filesystem::path& out_dir,
                                     bool quiet) {
    if (velocities.empty()) throw Error("sweep_velocity: no velocities given");
    if (!base.domain.contains(probe_x, probe_y))
        throw Error("sweep_velocity: probe point outside domain");
    std::filesystem::create_directories(out_dir);

    const std::size_t n_windows = base.schedule.windows.size();
    std::vector<SweepRow> rows;
    for (double v : velocities) {
        if (!(v > 0.0)) throw Error("sweep_velocity: velocities must be > 0");
        // time for the source center to reach the probe along its path
        const double along =
            (probe_x - base.source.start_x) * base.source.dir_x +
            (probe_y - base.source.start_y) * base.source.dir_y;
        if (!(along > 0.0))
            throw Error("sweep_velocity: probe is not ahead of the source start");
        const double t_pass = along / v;

        SimulationConfig cfg = base;
        cfg.source.velocity = v;
        cfg.schedule = WindowSchedule::make(t_pass, t_pass / static_cast<double>(n_windows));

        char sub[32];
        std::snprintf(sub, sizeof(sub), "v_%g", v);
        const auto run_dir = out_dir / sub;

        if (!quiet) std::fprintf(stderr, "sweep: v = %g mm/s, t_pass = %g s\n", v, t_pass);
        const FemSolution fem = run_fem(cfg, run_dir, quiet);
        const auto snapshots = run_pinn(cfg, run_dir, quiet);

        SweepRow row;
        row.velocity = v;
        row.t_pass = t_pass;
        row.fem_peak = interpolate(fem, {probe_x, probe_y, t_pass});
        row.pinn_peak = query(snapshots, {probe_x, probe_y, t_pass});
        rows.push_back(row);
    }

    write_sweep_csv(out_dir / "sweep.csv", rows, RunStamp{base.hash_hex(), base.seed});
    return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows,
                     const RunStamp& stamp) {
    auto out = open_out(path);
    out << stamp_line(stamp) << "velocity_mm_s,t_pass_s,fem_peak_K,pinn_peak_K\n";
    for (const auto& r : rows)
        out << fmt(r.velocity) << ',' << fmt(r.t_pass) << ',' << fmt(r.fem_peak) << ','
            << fmt(r.pinn_peak) << '\n';
}

} // namespace heatpinn
