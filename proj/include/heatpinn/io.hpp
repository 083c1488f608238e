#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "heatpinn/config.hpp"
#include "heatpinn/fem.hpp"
#include "heatpinn/training.hpp"

namespace heatpinn {

/// Any queryable temperature field u(x, y, t). Wraps either a PINN snapshot
/// collection or an FEM trajectory so exporters and metrics can treat both
/// uniformly.
class FieldSource {
public:
    explicit FieldSource(std::vector<WindowSnapshot> snapshots);
    explicit FieldSource(FemSolution fem);

    double value(const SpaceTimePoint& p) const;
    double t_end() const;
    const std::vector<WindowSnapshot>* snapshots() const;
    const FemSolution* fem() const;

private:
    std::vector<WindowSnapshot> snapshots_;
    FemSolution fem_;
    bool is_fem_ = false;
};

struct ProfileSample {
    double s = 0.0; ///< arc length along the path (mm)
    double u = 0.0; ///< temperature (K)
};

std::vector<ProfileSample> extract_line_profile(const FieldSource& src, const Segment& path, int n,
                                                double t);

/// Per-time comparison metrics over a regular probe grid and the E-F path.
struct ComparisonRow {
    double t = 0.0;
    double grid_l2_rel = 0.0;  ///< ||pinn - fem||_2 / ||fem||_2 over the grid
    double grid_linf = 0.0;    ///< max |pinn - fem| (K)
    double profile_l2_rel = 0.0;
    double peak_pinn = 0.0, peak_fem = 0.0; ///< max over the E-F profile (K)
    double peak_rel_err = 0.0; ///< |peak_pinn - peak_fem| / peak_fem
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
};

ComparisonReport compare(const FieldSource& pinn, const FieldSource& fem,
                         const std::vector<double>& times, const DomainSpec& d,
                         const OutputSettings& out);

/// All text outputs embed the config hash and seed in a leading comment.
struct RunStamp {
    std::string config_hash;
    std::uint64_t seed = 0;
};

void write_profile_csv(const std::filesystem::path& path, const std::vector<ProfileSample>& prof,
                       const RunStamp& stamp);
void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& history,
                    int window_index, const RunStamp& stamp);
void write_comparison_csv(const std::filesystem::path& path, const ComparisonReport& report,
                          const RunStamp& stamp);
std::string comparison_summary(const ComparisonReport& report);

/// Regular-grid field export. CSV schema: x_mm,y_mm,t_s,u_K.
void export_field_csv(const std::filesystem::path& path, const FieldSource& src,
                      const DomainSpec& d, double t, int nx, int ny, const RunStamp& stamp);
/// VTK legacy ASCII structured-points file with one scalar field.
void export_field_vtk(const std::filesystem::path& path, const FieldSource& src,
                      const DomainSpec& d, double t, int nx, int ny, const RunStamp& stamp);

/// FEM trajectory persistence: one JSON header line plus the raw
/// little-endian float64 nodal payload, step by step.
void save_fem_solution(const std::filesystem::path& path, const FemSolution& sol,
                       const RunStamp& stamp);
FemSolution load_fem_solution(const std::filesystem::path& path);

/// Run a full sequential PINN training and write snapshots, loss curves and
/// the run manifest into out_dir. Returns the snapshots.
std::vector<WindowSnapshot> run_pinn(const SimulationConfig& cfg,
                                     const std::filesystem::path& out_dir, bool quiet = false);

/// Load the snapshots listed by a run manifest written by run_pinn.
std::vector<WindowSnapshot> load_pinn_run(const std::filesystem::path& run_dir);

/// Run the FEM solver for the configured problem and write the trajectory.
FemSolution run_fem(const SimulationConfig& cfg, const std::filesystem::path& out_dir,
                    bool quiet = false);

struct SweepRow {
    double velocity = 0.0;
    double t_pass = 0.0;
    double fem_peak = 0.0;
    double pinn_peak = 0.0;
};

/// Velocity sweep at a probe point: for each velocity the problem is run with
/// t_total = time for the source center to reach the probe, and both solvers
/// report the probe temperature at that moment.
std::vector<SweepRow> sweep_velocity(const SimulationConfig& base,
                                     const std::vector<double>& velocities, double probe_x,
                                     double probe_y, const std::filesystem::path& out_dir,
                                     bool quiet = false);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows,
                     const RunStamp& stamp);

} // namespace heatpinn
