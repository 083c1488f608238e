#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "heatpinn/autodiff.hpp"
#include "heatpinn/network.hpp"
#include "heatpinn/physics.hpp"
#include "heatpinn/sampling.hpp"

namespace heatpinn {

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

struct TrainHyper {
    int epochs_per_phase = 20000;
    double learning_rate = 1e-3;
    double lr_decay = 0.9;      ///< multiplicative decay factor
    int lr_decay_interval = 2000; ///< epochs between decays (0 = constant lr)
    AdamParams adam;
    LossWeights weights;
    int resample_interval = 500; ///< interior points redrawn every this many epochs (0 = never)
    int minibatch = 0;          ///< interior points per epoch (0 = full batch)
    bool reset_adam_per_phase = true;
    bool normalize_time_per_window = true;
    /// First-window epochs spent value-fitting the quasi-steady warm-start
    /// ansatz before the PDE loss takes over (0 = off). Counted against
    /// epochs_per_phase, so the total number of optimizer steps per phase is
    /// unchanged. The PDE loss alone cannot grow the sharp moving hot spot
    /// from a fresh initialization (its minimum sits in a narrow valley the
    /// optimizer never finds from flat); the warm start lands inside it.
    int warmup_epochs = 0;
    double warmup_lr = 0.0; ///< learning rate during warmup (0 = learning_rate)

    void validate() const;

    double lr_at(int epoch) const;
};

/// Ordered tiling of [0, t_total] into training windows.
struct WindowSchedule {
    double t_total = 8.0;
    double dt_window = 2.0;
    std::vector<std::pair<double, double>> windows;

    static WindowSchedule make(double t_total, double dt_window);
    void validate() const;
};

/// Frozen result of one training phase.
struct WindowSnapshot {
    int index = 0;
    double t0 = 0.0, t1 = 0.0;
    NetworkParams params;
    Normalization norm;
    double loss_ic = 0.0, loss_bc = 0.0, loss_r = 0.0, loss_total = 0.0;
};

/// Adam moment buffers congruent with the optimized network.
struct AdamState {
    ParamGradient m, v;
    long step = 0;

    static AdamState zeros_like(const NetworkParams& net);
};

/// One Adam update with bias correction, in place.
void adam_step(NetworkParams& net, const ParamGradient& grad, AdamState& state,
               const AdamParams& ap, double lr);

struct LossRecord {
    int epoch = 0;
    double ic = 0.0, bc = 0.0, residual = 0.0, total = 0.0;
};

struct TrainResult {
    std::vector<LossRecord> history;
    bool diverged = false;
    std::string divergence_note;
};

/// Everything train_window needs besides the network and the window itself.
struct TrainSetup {
    DomainSpec domain;
    MaterialProps material;
    SourceSpec source;
    Architecture arch;
    TrainHyper hyper;
    SamplingCounts counts;
    WindowSchedule schedule;
    double out_scale = 500.0;
    double out_offset = 298.0;
    double initial_temperature = 298.0;

    /// Optional progress hook, invoked every progress_interval epochs.
    std::function<void(int window, const LossRecord&)> progress;
    int progress_interval = 500;
};

/// Input/output normalization used for a given window under the setup's
/// time-normalization switch.
Normalization window_normalization(const TrainSetup& setup, double t0, double t1);

/// Adam-trains `net` in place on the window [t0, t1] against the sampled
/// collocation losses; `ic_data` holds the window-start targets.
TrainResult train_window(NetworkParams& net, const TrainSetup& setup, int window_index, double t0,
                         double t1, const InitialConditionData& ic_data, std::uint64_t seed);

/// Initial-condition data for the next window: n interior points at the
/// snapshot's end time, targets evaluated from the snapshot network.
InitialConditionData transfer_ic(const WindowSnapshot& snapshot, const DomainSpec& d, int n,
                                 std::uint64_t seed);

/// Invoked after each completed phase (snapshot is final for that window).
using PhaseCallback = std::function<void(const WindowSnapshot&, const TrainResult&)>;

/// The sequential transfer-learning regime: one network trained recursively
/// window by window, warm-started between phases; the first window starts
/// from the uniform initial temperature, later windows from the previous
/// snapshot's end state. Throws on divergence after reporting completed
/// phases through the callback.
std::vector<WindowSnapshot> run_sequential(const TrainSetup& setup, std::uint64_t seed,
                                           const PhaseCallback& on_phase = {});

/// Temperature at p from the snapshot collection; p.t selects the window
/// containing it (a boundary time resolves to the later window).
double query(const std::vector<WindowSnapshot>& snapshots, const SpaceTimePoint& p);

/// Snapshot file: one JSON header line followed by the raw little-endian
/// float64 parameter payload in flatten() order.
void save_snapshot(const std::filesystem::path& path, const WindowSnapshot& snapshot);
WindowSnapshot load_snapshot(const std::filesystem::path& path);

} // namespace heatpinn
