#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <heatpinn/common.hpp>
#include <heatpinn/config.hpp>
#include <heatpinn/io.hpp>
#include <heatpinn/training.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace heatpinn;
namespace fs = std::filesystem;

namespace {

const std::string kTinyConfig = R"(# minimal fast problem for io tests
[material]
k = 0.025
rho = 7.6e-6
c = 658

[network]
hidden_layers = 1
hidden_width = 8

[training]
epochs_per_phase = 20
learning_rate = 2e-3
resample_interval = 0

[schedule]
t_total = 1
dt_window = 1

[sampling]
interior = 64
boundary_per_edge = 8
initial = 32

[fem]
h = 2
dt = 0.25

[output]
grid_nx = 11
grid_ny = 6
profile_samples = 21
)";

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "heatpinn_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(bool(in), "cannot open " << path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd =
        std::string(HEATPINN_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    return std::system(cmd.c_str());
}

WindowSnapshot constant_snapshot(double t0, double t1, double temperature) {
    WindowSnapshot snap;
    snap.t0 = t0;
    snap.t1 = t1;
    snap.params = init_network({.hidden_layers = 1, .hidden_width = 2}, 0);
    for (auto& w : snap.params.weights) w.setZero();
    snap.norm = Normalization::identity();
    snap.norm.out = {1.0, temperature};
    return snap;
}

FemSolution constant_fem(double value, int frames) {
    FemSolution sol;
    sol.mesh = build_structured_mesh(10, 5, 2.0, 2.0);
    sol.dt = 0.5;
    for (int i = 0; i < frames; ++i)
        sol.steps.push_back(Eigen::VectorXd::Constant(sol.mesh.node_count(), value));
    return sol;
}

} // namespace

TEST_CASE("paper config parses to the published table values") {
    const SimulationConfig cfg = parse_config(fs::path(HEATPINN_CONFIG_DIR) / "paper.ini");

    CHECK(cfg.domain.length == 20.0);
    CHECK(cfg.domain.width == 10.0);
    CHECK(cfg.material.k == 0.025);
    CHECK(cfg.material.rho == 7.6e-6);
    CHECK(cfg.material.c == 658.0);
    CHECK(cfg.material.gamma() == doctest::Approx(5.0008e-3).epsilon(1e-15));
    CHECK(cfg.source.q0 == 5.0);
    CHECK(cfg.source.r0 == 1.0);
    CHECK(cfg.source.velocity == 2.0);
    CHECK(cfg.source.start_x == 0.0);
    CHECK(cfg.source.start_y == 5.0);
    CHECK(cfg.arch.hidden_layers == 9);
    CHECK(cfg.arch.hidden_width == 128);
    CHECK(cfg.hyper.weights.ic == 250.0);
    CHECK(cfg.hyper.weights.bc == 250.0);
    CHECK(cfg.hyper.weights.residual == 1000.0);
    CHECK(cfg.hyper.epochs_per_phase == 20000);
    CHECK(cfg.schedule.t_total == 8.0);
    CHECK(cfg.schedule.windows.size() == 4);
    CHECK(cfg.counts.interior == 20000);
    CHECK(cfg.counts.boundary_per_edge == 1000);
    CHECK(cfg.counts.initial == 2000);
    CHECK(cfg.fem.h == 0.25);
    CHECK(cfg.fem.dt == 0.05);
    CHECK(cfg.out_scale == 500.0);
    CHECK(cfg.out_offset == 298.0);
    CHECK(cfg.initial_temperature == 298.0);
    CHECK(cfg.seed == 0);

    CHECK(cfg.domain.bc[static_cast<int>(EdgeId::AD)].kind ==
          BoundaryCondition::Kind::dirichlet);
    CHECK(cfg.domain.bc[static_cast<int>(EdgeId::AD)].value == 298.0);
    for (EdgeId e : {EdgeId::AB, EdgeId::BC, EdgeId::CD}) {
        CHECK(cfg.domain.bc[static_cast<int>(e)].kind == BoundaryCondition::Kind::neumann);
        CHECK(cfg.domain.bc[static_cast<int>(e)].value == 0.001);
    }

    // probe path: horizontal midline
    CHECK(cfg.domain.ef_path.x0 == 0.0);
    CHECK(cfg.domain.ef_path.y0 == 5.0);
    CHECK(cfg.domain.ef_path.x1 == 20.0);
    CHECK(cfg.domain.ef_path.y1 == 5.0);

    // the two shipped companions parse too
    CHECK_NOTHROW(parse_config(fs::path(HEATPINN_CONFIG_DIR) / "desk.ini"));
    CHECK_NOTHROW(parse_config(fs::path(HEATPINN_CONFIG_DIR) / "sweep.ini"));
}

TEST_CASE("config parse errors") {
    SUBCASE("missing material section") {
        try {
            parse_config_text("[domain]\nlength = 20\n", "inline");
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("missing required [material] section") !=
                  std::string::npos);
        }
    }

    SUBCASE("constraint violations name the field") {
        const std::string bad = "[material]\nk=0.025\nrho=7.6e-6\nc=658\n[source]\nr0 = -1\n";
        CHECK_THROWS_WITH_AS(parse_config_text(bad), "source.r0 must be > 0", Error);
    }

    SUBCASE("unknown keys and sections rejected") {
        CHECK_THROWS_AS(parse_config_text("[material]\nk=1\nrho=1\nc=1\nbogus=3\n"), Error);
        CHECK_THROWS_AS(parse_config_text("[nosuch]\nx=1\n"), Error);
    }

    SUBCASE("malformed lines carry the location") {
        try {
            parse_config_text("[material]\nk 0.025\n", "myfile.ini");
            FAIL("expected an error");
        } catch (const Error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("myfile.ini:2") != std::string::npos);
        }
    }

    SUBCASE("bad boundary condition text") {
        CHECK_THROWS_AS(parse_config_text("[material]\nk=1\nrho=1\nc=1\n[bc]\nad = fixed 298\n"),
                        Error);
    }

    SUBCASE("unreadable file") {
        CHECK_THROWS_AS(parse_config("/nonexistent/nowhere.ini"), Error);
    }
}

TEST_CASE("defaults fill a minimal config") {
    const SimulationConfig cfg = parse_config_text("[material]\nk=0.025\nrho=7.6e-6\nc=658\n");
    CHECK(cfg.domain.length == 20.0);
    CHECK(cfg.source.start_x == 0.0);
    CHECK(cfg.source.start_y == 5.0); // width / 2
    CHECK(cfg.schedule.windows.size() == 4);
    CHECK(cfg.arch.hidden_layers == 9);
    CHECK(cfg.seed == 0);

    SUBCASE("domain-dependent defaults follow the domain") {
        const SimulationConfig wide = parse_config_text(
            "[domain]\nwidth = 16\n[material]\nk=0.025\nrho=7.6e-6\nc=658\n");
        CHECK(wide.source.start_y == 8.0);
        CHECK(wide.domain.ef_path.y0 == 8.0);
    }
}

TEST_CASE("canonical dump round-trips and hashes stably") {
    const SimulationConfig cfg = parse_config_text(kTinyConfig);
    const std::string dump = cfg.canonical_dump();
    const SimulationConfig back = parse_config_text(dump, "canonical");
    CHECK(back.canonical_dump() == dump);

    const std::string hash = cfg.hash_hex();
    CHECK(hash.size() == 16);
    CHECK(hash.find_first_not_of("0123456789abcdef") == std::string::npos);
    CHECK(back.hash_hex() == hash);

    SUBCASE("any field change moves the hash") {
        SimulationConfig other = cfg;
        other.seed = 1;
        CHECK(other.hash_hex() != hash);
        SimulationConfig other2 = cfg;
        other2.hyper.learning_rate = 1e-3;
        CHECK(other2.hash_hex() != hash);
    }
}

TEST_CASE("overrides") {
    SimulationConfig cfg = parse_config_text(kTinyConfig);

    SUBCASE("simple value") {
        apply_override(cfg, "training.learning_rate=5e-4");
        CHECK(cfg.hyper.learning_rate == 5e-4);
    }

    SUBCASE("schedule overrides rebuild the window list") {
        apply_override(cfg, "schedule.t_total=4");
        CHECK(cfg.schedule.windows.size() == 4);
        CHECK(cfg.schedule.windows.back() == std::pair{3.0, 4.0});
    }

    SUBCASE("domain overrides move the probe path midline") {
        apply_override(cfg, "domain.width=8");
        CHECK(cfg.domain.ef_path.y0 == 4.0);
        CHECK(cfg.domain.ef_path.y1 == 4.0);
    }

    SUBCASE("boundary condition override") {
        apply_override(cfg, "bc.bc=dirichlet 298");
        CHECK(cfg.domain.bc[static_cast<int>(EdgeId::BC)].kind ==
              BoundaryCondition::Kind::dirichlet);
    }

    SUBCASE("rejects malformed and invalid assignments") {
        CHECK_THROWS_AS(apply_override(cfg, "no_dot_or_equals"), Error);
        CHECK_THROWS_AS(apply_override(cfg, "training.learning_rate"), Error);
        CHECK_THROWS_AS(apply_override(cfg, "source.r0=-2"), Error);
        CHECK_THROWS_AS(apply_override(cfg, "nosuch.key=1"), Error);
    }
}

TEST_CASE("train_setup carries the config into the trainer") {
    const SimulationConfig cfg = parse_config_text(kTinyConfig);
    const TrainSetup setup = cfg.train_setup();
    CHECK(setup.arch == cfg.arch);
    CHECK(setup.counts.interior == 64);
    CHECK(setup.schedule.windows.size() == 1);
    CHECK(setup.out_scale == cfg.out_scale);
    CHECK(setup.out_offset == cfg.out_offset);
    CHECK(setup.initial_temperature == cfg.initial_temperature);
    CHECK(setup.hyper.epochs_per_phase == 20);
}

TEST_CASE("field sources wrap both solvers uniformly") {
    const FieldSource pinn(std::vector<WindowSnapshot>{constant_snapshot(0.0, 1.0, 310.0)});
    const FieldSource fem(constant_fem(298.0, 3));

    CHECK(pinn.value({3.0, 3.0, 0.5}) == 310.0);
    CHECK(pinn.t_end() == 1.0);
    CHECK(pinn.snapshots() != nullptr);
    CHECK(pinn.fem() == nullptr);

    CHECK(fem.value({3.0, 3.0, 0.5}) == 298.0);
    CHECK(fem.t_end() == 1.0);
    CHECK(fem.fem() != nullptr);
    CHECK(fem.snapshots() == nullptr);
}

TEST_CASE("line profile extraction") {
    const FieldSource src(std::vector<WindowSnapshot>{constant_snapshot(0.0, 1.0, 305.0)});
    Segment path{0.0, 5.0, 20.0, 5.0};

    const auto prof = extract_line_profile(src, path, 21, 0.5);
    REQUIRE(prof.size() == 21);
    CHECK(prof.front().s == 0.0);
    CHECK(prof.back().s == doctest::Approx(20.0));
    CHECK(prof[10].s == doctest::Approx(10.0));
    for (const auto& sample : prof) CHECK(sample.u == 305.0);

    CHECK_THROWS_AS(extract_line_profile(src, path, 1, 0.5), Error);
}

TEST_CASE("comparison metrics") {
    const OutputSettings out{.grid_nx = 11, .grid_ny = 6, .profile_samples = 21};
    const DomainSpec d;

    SUBCASE("identical fields compare to zero") {
        const FieldSource pinn(std::vector<WindowSnapshot>{constant_snapshot(0.0, 1.0, 298.0)});
        const FieldSource fem(constant_fem(298.0, 3));
        const ComparisonReport rep = compare(pinn, fem, {0.25, 0.75}, d, out);
        REQUIRE(rep.rows.size() == 2);
        for (const auto& row : rep.rows) {
            CHECK(row.grid_l2_rel == 0.0);
            CHECK(row.grid_linf == 0.0);
            CHECK(row.profile_l2_rel == 0.0);
            CHECK(row.peak_rel_err == 0.0);
            CHECK(row.peak_pinn == 298.0);
            CHECK(row.peak_fem == 298.0);
        }
    }

    SUBCASE("constant offset gives the analytic metrics") {
        const FieldSource pinn(std::vector<WindowSnapshot>{constant_snapshot(0.0, 1.0, 300.0)});
        const FieldSource fem(constant_fem(298.0, 3));
        const ComparisonReport rep = compare(pinn, fem, {0.5}, d, out);
        REQUIRE(rep.rows.size() == 1);
        const auto& row = rep.rows[0];
        CHECK(row.grid_linf == doctest::Approx(2.0).epsilon(1e-13));
        CHECK(row.grid_l2_rel == doctest::Approx(2.0 / 298.0).epsilon(1e-12));
        CHECK(row.profile_l2_rel == doctest::Approx(2.0 / 298.0).epsilon(1e-12));
        CHECK(row.peak_pinn == 300.0);
        CHECK(row.peak_fem == 298.0);
        CHECK(row.peak_rel_err == doctest::Approx(2.0 / 298.0).epsilon(1e-12));

        const std::string summary = comparison_summary(rep);
        CHECK(summary.find("t = ") != std::string::npos);
        CHECK_FALSE(summary.empty());
    }
}

TEST_CASE("csv writers stamp their outputs") {
    const fs::path dir = fresh_dir("csv");
    const RunStamp stamp{"0123456789abcdef", 42};

    SUBCASE("profile csv") {
        const std::vector<ProfileSample> prof{{0.0, 298.0}, {1.0, 299.5}, {2.0, 3.0e2}};
        write_profile_csv(dir / "p.csv", prof, stamp);
        const auto lines = lines_of(slurp(dir / "p.csv"));
        REQUIRE(lines.size() == 5);
        CHECK(lines[0] == "# config_hash=0123456789abcdef seed=42");
        CHECK(lines[1] == "s_mm,temperature_K");
        CHECK(lines[2].find("0,298") == 0);
        CHECK(lines[4].find("2,300") == 0);
    }

    SUBCASE("loss csv carries the window index") {
        const std::vector<LossRecord> hist{{0, 1.0, 2.0, 3.0, 4250.0},
                                           {1, 0.5, 1.0, 1.5, 1875.0}};
        write_loss_csv(dir / "l.csv", hist, 3, stamp);
        const auto lines = lines_of(slurp(dir / "l.csv"));
        REQUIRE(lines.size() == 4);
        CHECK(lines[0].find("# config_hash=0123456789abcdef seed=42") == 0);
        CHECK(lines[0].find("window=3") != std::string::npos);
        CHECK(lines[1] == "epoch,L_ic,L_bc,L_r,total");
        CHECK(lines[2].find("0,1,2,3,4250") == 0);
    }

    SUBCASE("comparison csv") {
        ComparisonReport rep;
        rep.rows.push_back({2.0, 0.05, 1.5, 0.04, 500.0, 510.0, 0.02});
        write_comparison_csv(dir / "c.csv", rep, stamp);
        const auto lines = lines_of(slurp(dir / "c.csv"));
        REQUIRE(lines.size() == 3);
        CHECK(lines[1] == "t_s,grid_l2_rel,grid_linf_K,profile_l2_rel,peak_pinn_K,peak_fem_K,peak_rel_err");
        CHECK(lines[2].find("2,0.05") == 0);
    }

    SUBCASE("sweep csv") {
        const std::vector<SweepRow> rows{{0.5, 20.0, 700.0, 695.0}, {1.0, 10.0, 600.0, 596.0}};
        write_sweep_csv(dir / "s.csv", rows, stamp);
        const auto lines = lines_of(slurp(dir / "s.csv"));
        REQUIRE(lines.size() == 4);
        CHECK(lines[1] == "velocity_mm_s,t_pass_s,fem_peak_K,pinn_peak_K");
        CHECK(lines[2].find("0.5,20,700,695") == 0);
    }
}

TEST_CASE("field exporters") {
    const fs::path dir = fresh_dir("export");
    const RunStamp stamp{"feedfacefeedface", 9};
    const DomainSpec d;
    const FieldSource src(std::vector<WindowSnapshot>{constant_snapshot(0.0, 1.0, 301.0)});

    SUBCASE("csv grid") {
        export_field_csv(dir / "f.csv", src, d, 0.5, 11, 6, stamp);
        const auto lines = lines_of(slurp(dir / "f.csv"));
        REQUIRE(lines.size() == 2 + 11 * 6);
        CHECK(lines[0] == "# config_hash=feedfacefeedface seed=9");
        CHECK(lines[1] == "x_mm,y_mm,t_s,u_K");
        CHECK(lines[2] == "0,0,0.5,301");
        CHECK(lines.back() == "20,10,0.5,301");
    }

    SUBCASE("vtk structured points") {
        export_field_vtk(dir / "f.vtk", src, d, 0.5, 11, 6, stamp);
        const auto lines = lines_of(slurp(dir / "f.vtk"));
        REQUIRE(lines.size() > 10);
        CHECK(lines[0] == "# vtk DataFile Version 3.0");
        CHECK(lines[1].find("config_hash=feedfacefeedface") != std::string::npos);
        CHECK(lines[2] == "ASCII");
        CHECK(lines[3] == "DATASET STRUCTURED_POINTS");
        CHECK(lines[4] == "DIMENSIONS 11 6 1");
        CHECK(lines[5] == "ORIGIN 0 0 0");
        CHECK(lines[6] == "SPACING 2 2 1");
        CHECK(lines[7] == "POINT_DATA 66");
        CHECK(lines[8] == "SCALARS temperature_K double 1");
        CHECK(lines[9] == "LOOKUP_TABLE default");
        int values = 0;
        for (std::size_t i = 10; i < lines.size(); ++i) {
            std::istringstream in(lines[i]);
            double v = 0.0;
            while (in >> v) {
                CHECK(v == 301.0);
                ++values;
            }
        }
        CHECK(values == 66);
    }
}

TEST_CASE("run_fem and run_pinn write loadable artifacts") {
    const fs::path dir = fresh_dir("runs");
    const SimulationConfig cfg = parse_config_text(kTinyConfig);

    SUBCASE("fem run") {
        const FemSolution sol = run_fem(cfg, dir / "fem", true);
        CHECK(sol.steps.size() == 5); // 1 s at dt = 0.25
        const FemSolution back = load_fem_solution(dir / "fem" / "fem.solution");
        REQUIRE(back.steps.size() == sol.steps.size());
        for (std::size_t i = 0; i < sol.steps.size(); ++i)
            CHECK((back.steps[i] - sol.steps[i]).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("pinn run and reload") {
        const auto snaps = run_pinn(cfg, dir / "pinn", true);
        REQUIRE(snaps.size() == 1);
        CHECK(fs::exists(dir / "pinn" / "manifest.json"));
        CHECK(fs::exists(dir / "pinn" / "window_000.snap"));
        CHECK(fs::exists(dir / "pinn" / "loss_window_000.csv"));

        const auto loaded = load_pinn_run(dir / "pinn");
        REQUIRE(loaded.size() == 1);
        CHECK(loaded[0].t0 == 0.0);
        CHECK(loaded[0].t1 == 1.0);
        bool same = true;
        for (std::size_t k = 0; k < snaps[0].params.weights.size(); ++k)
            if ((snaps[0].params.weights[k] - loaded[0].params.weights[k])
                    .cwiseAbs()
                    .maxCoeff() != 0.0)
                same = false;
        CHECK(same);

        const std::string manifest = slurp(dir / "pinn" / "manifest.json");
        CHECK(manifest.find("heatpinn-run-v1") != std::string::npos);
        CHECK(manifest.find(cfg.hash_hex()) != std::string::npos);

        SUBCASE("byte-identical on re-run") {
            run_pinn(cfg, dir / "pinn2", true);
            CHECK(slurp(dir / "pinn2" / "loss_window_000.csv") ==
                  slurp(dir / "pinn" / "loss_window_000.csv"));
            CHECK(slurp(dir / "pinn2" / "window_000.snap") ==
                  slurp(dir / "pinn" / "window_000.snap"));
        }
    }
}

TEST_CASE("velocity sweep scales the horizon per velocity") {
    const fs::path dir = fresh_dir("sweep");
    SimulationConfig cfg = parse_config_text(kTinyConfig);
    cfg.hyper.epochs_per_phase = 10;

    const auto rows = sweep_velocity(cfg, {2.0, 4.0}, 10.0, 5.0, dir, true);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].velocity == 2.0);
    CHECK(rows[0].t_pass == 5.0);
    CHECK(rows[1].velocity == 4.0);
    CHECK(rows[1].t_pass == 2.5);
    CHECK(rows[0].fem_peak > 297.0);
    CHECK(rows[0].pinn_peak > 0.0);
    CHECK(fs::exists(dir / "v_2" / "fem.solution"));
    CHECK(fs::exists(dir / "v_4" / "manifest.json"));
    CHECK(fs::exists(dir / "sweep.csv"));

    SUBCASE("probe behind the source start is rejected") {
        CHECK_THROWS_AS(sweep_velocity(cfg, {1.0}, 0.0, 5.0, dir, true), Error);
    }
    SUBCASE("probe outside the domain is rejected") {
        CHECK_THROWS_AS(sweep_velocity(cfg, {1.0}, 25.0, 5.0, dir, true), Error);
    }
}

TEST_CASE("command line interface") {
    const fs::path dir = fresh_dir("cli");
    const fs::path config = dir / "tiny.ini";
    std::ofstream(config) << kTinyConfig;
    const fs::path log = dir / "log.txt";

    SUBCASE("help exits cleanly, missing subcommand does not") {
        CHECK(run_cli("--help", log) == 0);
        CHECK(run_cli("", log) != 0);
        CHECK(run_cli("frobnicate --config " + config.string(), log) != 0);
    }

    SUBCASE("fem, profile, export, compare, pinn round trip") {
        REQUIRE(run_cli("run-fem --config " + config.string() + " --out-dir " +
                            (dir / "fem").string() + " --quiet",
                        log) == 0);
        REQUIRE(fs::exists(dir / "fem" / "fem.solution"));

        REQUIRE(run_cli("run-pinn --config " + config.string() + " --out-dir " +
                            (dir / "pinn").string() + " --quiet",
                        log) == 0);
        REQUIRE(fs::exists(dir / "pinn" / "manifest.json"));

        CHECK(run_cli("profile --config " + config.string() + " --fem " +
                          (dir / "fem" / "fem.solution").string() + " --t 0.5 --out " +
                          (dir / "prof.csv").string(),
                      log) == 0);
        const auto prof_lines = lines_of(slurp(dir / "prof.csv"));
        CHECK(prof_lines.size() == 2 + 21);
        CHECK(prof_lines[1] == "s_mm,temperature_K");

        CHECK(run_cli("profile --config " + config.string() + " --pinn " +
                          (dir / "pinn").string() + " --t 0.5 --samples 11 --out " +
                          (dir / "prof_pinn.csv").string(),
                      log) == 0);
        CHECK(lines_of(slurp(dir / "prof_pinn.csv")).size() == 2 + 11);

        CHECK(run_cli("export --config " + config.string() + " --fem " +
                          (dir / "fem" / "fem.solution").string() +
                          " --t 1.0 --format vtk --out " + (dir / "f.vtk").string(),
                      log) == 0);
        CHECK(lines_of(slurp(dir / "f.vtk"))[0] == "# vtk DataFile Version 3.0");

        CHECK(run_cli("compare --config " + config.string() + " --pinn " +
                          (dir / "pinn").string() + " --fem " +
                          (dir / "fem" / "fem.solution").string() + " --times 0.5,1.0 --out-dir " +
                          (dir / "cmp").string(),
                      log) == 0);
        CHECK(fs::exists(dir / "cmp" / "compare.csv"));
        CHECK(fs::exists(dir / "cmp" / "summary.txt"));
        const auto cmp_lines = lines_of(slurp(dir / "cmp" / "compare.csv"));
        REQUIRE(cmp_lines.size() == 4); // stamp + header + two times
        const std::string out_text = slurp(log);
        CHECK(out_text.find("t = ") != std::string::npos);
    }

    SUBCASE("seed and set overrides reach the run") {
        REQUIRE(run_cli("run-fem --config " + config.string() + " --set fem.dt=0.5 --out-dir " +
                            (dir / "fem_dt").string() + " --quiet",
                        log) == 0);
        const FemSolution sol = load_fem_solution(dir / "fem_dt" / "fem.solution");
        CHECK(sol.dt == 0.5);
        CHECK(sol.steps.size() == 3);

        REQUIRE(run_cli("run-pinn --config " + config.string() + " --seed 5 --out-dir " +
                            (dir / "pinn_seed").string() + " --quiet",
                        log) == 0);
        const std::string manifest = slurp(dir / "pinn_seed" / "manifest.json");
        CHECK(manifest.find("\"seed\": 5") != std::string::npos);
    }

    SUBCASE("bad invocations fail with a diagnostic") {
        CHECK(run_cli("run-fem --config /does/not/exist.ini --out-dir " + (dir / "x").string(),
                      log) != 0);
        CHECK(run_cli("run-fem --config " + config.string(), log) != 0); // missing --out-dir
        CHECK(run_cli("profile --config " + config.string() + " --t 0.5 --out " +
                          (dir / "p.csv").string(),
                      log) != 0); // neither --pinn nor --fem
        CHECK(run_cli("run-fem --config " + config.string() + " --set bogus.key=1 --out-dir " +
                          (dir / "y").string(),
                      log) != 0);
        const std::string text = slurp(log);
        CHECK(text.find("error") != std::string::npos);
    }
}
