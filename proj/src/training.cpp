#include "heatpinn/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace heatpinn {

namespace {
constexpr std::uint64_t kWindowTag = 0x776e6477ULL;   // "wndw"
constexpr std::uint64_t kResampleTag = 0x72736d70ULL; // "rsmp"
constexpr std::uint64_t kTransferTag = 0x78666572ULL; // "xfer"
constexpr std::uint64_t kIc0Tag = 0x69633030ULL;      // "ic00"
constexpr std::uint64_t kBatchTag = 0x62617463ULL;    // "batc"
} // namespace

void AdamParams::validate() const {
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw Error("adam.beta1 must be in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw Error("adam.beta2 must be in (0, 1)");
    if (!(eps > 0.0)) throw Error("adam.eps must be > 0");
}

void TrainHyper::validate() const {
    if (epochs_per_phase < 0) throw Error("training.epochs must be >= 0");
    if (!(learning_rate > 0.0)) throw Error("training.learning_rate must be > 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw Error("training.lr_decay must be in (0, 1]");
    if (lr_decay_interval < 0) throw Error("training.lr_decay_interval must be >= 0");
    if (resample_interval < 0) throw Error("training.resample_interval must be >= 0");
    if (minibatch < 0) throw Error("training.minibatch must be >= 0");
    if (warmup_epochs < 0) throw Error("training.warmup_epochs must be >= 0");
    if (warmup_epochs > epochs_per_phase)
        throw Error("training.warmup_epochs must be <= epochs_per_phase");
    if (warmup_lr < 0.0) throw Error("training.warmup_lr must be >= 0");
    adam.validate();
    weights.validate();
}

double TrainHyper::lr_at(int epoch) const {
    if (lr_decay_interval <= 0) return learning_rate;
    return learning_rate * std::pow(lr_decay, static_cast<double>(epoch / lr_decay_interval));
}

WindowSchedule WindowSchedule::make(double t_total, double dt_window) {
    if (!(t_total > 0.0)) throw Error("schedule.t_total must be > 0");
    if (!(dt_window > 0.0)) throw Error("schedule.dt_window must be > 0");
    WindowSchedule s;
    s.t_total = t_total;
    s.dt_window = dt_window;
    const int n = std::max(1, static_cast<int>(std::ceil(t_total / dt_window - 1e-9)));
    for (int i = 0; i < n; ++i) {
        const double t0 = i * dt_window;
        const double t1 = (i + 1 == n) ? t_total : (i + 1) * dt_window;
        s.windows.emplace_back(t0, t1);
    }
    return s;
}

void WindowSchedule::validate() const {
    if (windows.empty()) throw Error("schedule has no windows");
    if (windows.front().first != 0.0) throw Error("schedule must start at t = 0");
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (!(windows[i].second > windows[i].first))
            throw Error("schedule window " + std::to_string(i) + " is empty");
        if (i > 0 && windows[i].first != windows[i - 1].second)
            throw Error("schedule windows must tile without gaps or overlap");
    }
    if (std::abs(windows.back().second - t_total) > 1e-12)
        throw Error("schedule must end at t_total");
}

AdamState AdamState::zeros_like(const NetworkParams& net) {
    AdamState st;
    st.m = ParamGradient::zeros_like(net);
    st.v = ParamGradient::zeros_like(net);
    st.step = 0;
    return st;
}

void adam_step(NetworkParams& net, const ParamGradient& grad, AdamState& state,
               const AdamParams& ap, double lr) {
    if (!grad.congruent_with(net)) throw Error("adam_step: gradient shape mismatch");
    if (!grad.all_finite())
        throw Error("adam_step: non-finite gradient at step " + std::to_string(state.step + 1));
    state.step += 1;
    const double bc1 = 1.0 - std::pow(ap.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(ap.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < net.weights.size(); ++k) {
        auto update = [&](Eigen::Ref<Eigen::MatrixXd> p, const Eigen::MatrixXd& g,
                          Eigen::Ref<Eigen::MatrixXd> m, Eigen::Ref<Eigen::MatrixXd> v) {
            m = ap.beta1 * m + (1.0 - ap.beta1) * g;
            v = ap.beta2 * v.array().matrix() + (1.0 - ap.beta2) * g.array().square().matrix();
            p.array() -=
                lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + ap.eps);
        };
        update(net.weights[k], grad.weights[k], state.m.weights[k], state.v.weights[k]);
        update(net.biases[k], grad.biases[k], state.m.biases[k], state.v.biases[k]);
    }
}

Normalization window_normalization(const TrainSetup& setup, double t0, double t1) {
    if (setup.hyper.normalize_time_per_window)
        return Normalization::for_window(setup.domain, t0, t1, setup.out_scale, setup.out_offset);
    return Normalization::for_window(setup.domain, 0.0, setup.schedule.t_total, setup.out_scale,
                                     setup.out_offset);
}

namespace {

/// Deterministic without-replacement subset of {0..n-1} of size k (k < n).
std::vector<std::size_t> minibatch_indices(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.bits() % (n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace

TrainResult train_window(NetworkParams& net, const TrainSetup& setup, int window_index, double t0,
                         double t1, const InitialConditionData& ic_data, std::uint64_t seed) {
    const TrainHyper& hy = setup.hyper;
    const LossWeights& w = hy.weights;
    const DomainSpec& d = setup.domain;
    ic_data.validate(d);

    const Normalization norm = window_normalization(setup, t0, t1);

    // Boundary and initial sets are fixed for the whole phase.
    const std::vector<BoundarySample> boundary = sample_boundary(
        d, t0, t1, setup.counts.boundary_per_edge,
        seed_stream(seed, kWindowTag, static_cast<std::uint64_t>(window_index), 1));

    std::vector<SpaceTimePoint> dirichlet_pts;
    std::vector<double> dirichlet_targets;
    std::vector<BoundarySample> neumann_samples;
    std::vector<double> neumann_targets;
    for (const auto& s : boundary) {
        const BoundaryCondition& bc = d.bc_of(s.edge);
        if (bc.kind == BoundaryCondition::Kind::dirichlet) {
            dirichlet_pts.push_back(s.p);
            dirichlet_targets.push_back(bc.value);
        } else {
            neumann_samples.push_back(s);
            neumann_targets.push_back(bc.value);
        }
    }
    std::vector<SpaceTimePoint> neumann_pts;
    neumann_pts.reserve(neumann_samples.size());
    for (const auto& s : neumann_samples) neumann_pts.push_back(s.p);

    std::vector<SpaceTimePoint> interior;
    std::vector<SpaceTimePoint> scratch; // minibatch slice

    ParamGradient grad = ParamGradient::zeros_like(net);
    AdamState state = AdamState::zeros_like(net);

    TrainResult result;
    result.history.reserve(static_cast<std::size_t>(hy.epochs_per_phase));

    // Warm start (first window only, later windows inherit trained weights):
    // value-fit the closed-form ansatz on the initial interior batch, then
    // hand a fresh optimizer to the PDE phase. History rows for these epochs
    // carry the fit MSE in `total` with the PDE components zeroed.
    const int warmup = window_index == 0 ? std::min(hy.warmup_epochs, hy.epochs_per_phase) : 0;
    if (warmup > 0) {
        interior = sample_interior(d, t0, t1, setup.counts.interior,
                                   seed_stream(seed, kResampleTag,
                                               static_cast<std::uint64_t>(window_index), 0));
        std::vector<double> targets;
        targets.reserve(interior.size());
        for (const auto& p : interior)
            targets.push_back(warmstart_ansatz(setup.material, setup.source, setup.out_offset, p));
        const double lr_warm = hy.warmup_lr > 0.0 ? hy.warmup_lr : hy.learning_rate;
        const double n = static_cast<double>(interior.size());
        for (int epoch = 0; epoch < warmup; ++epoch) {
            grad.set_zero();
            double mse = 0.0;
            try {
                mse = loss_gradient_accumulate(net, norm, interior, DerivMode::value,
                                               value_target_loss_fn(targets), 1.0 / n, grad) /
                      n;
            } catch (const Error& err) {
                result.diverged = true;
                result.divergence_note = "window " + std::to_string(window_index) +
                                         ", warmup epoch " + std::to_string(epoch) + ": " +
                                         err.what();
                return result;
            }
            result.history.push_back({epoch, 0.0, 0.0, 0.0, mse});
            if (setup.progress && setup.progress_interval > 0 && epoch % setup.progress_interval == 0)
                setup.progress(window_index, result.history.back());
            if (!std::isfinite(mse)) {
                result.diverged = true;
                result.divergence_note = "window " + std::to_string(window_index) +
                                         ", warmup epoch " + std::to_string(epoch) +
                                         ": fit loss is non-finite";
                return result;
            }
            adam_step(net, grad, state, hy.adam, lr_warm);
        }
        state = AdamState::zeros_like(net); // fresh optimizer for the PDE phase
    }

    for (int epoch = warmup; epoch < hy.epochs_per_phase; ++epoch) {
        if (interior.empty() ||
            (hy.resample_interval > 0 && epoch % hy.resample_interval == 0 && epoch > 0)) {
            const int counter = hy.resample_interval > 0 ? epoch / hy.resample_interval : 0;
            interior = sample_interior(
                d, t0, t1, setup.counts.interior,
                seed_stream(seed, kResampleTag, static_cast<std::uint64_t>(window_index),
                            static_cast<std::uint64_t>(counter)));
        }

        std::span<const SpaceTimePoint> residual_batch = interior;
        if (hy.minibatch > 0 && static_cast<std::size_t>(hy.minibatch) < interior.size()) {
            Rng rng(seed_stream(seed, kBatchTag, static_cast<std::uint64_t>(window_index),
                                static_cast<std::uint64_t>(epoch)));
            const auto idx = minibatch_indices(interior.size(),
                                               static_cast<std::size_t>(hy.minibatch), rng);
            scratch.clear();
            for (std::size_t i : idx) scratch.push_back(interior[i]);
            residual_batch = scratch;
        }

        grad.set_zero();
        double l_r = 0.0, l_d = 0.0, l_n = 0.0, l_ic = 0.0;
        try {
            const double nr = static_cast<double>(residual_batch.size());
            l_r = loss_gradient_accumulate(net, norm, residual_batch, DerivMode::full,
                                           residual_loss_fn(setup.material, setup.source,
                                                            residual_batch),
                                           w.residual / nr, grad) /
                  nr;
            if (!dirichlet_pts.empty()) {
                const double nd = static_cast<double>(dirichlet_pts.size());
                l_d = loss_gradient_accumulate(net, norm, dirichlet_pts, DerivMode::value,
                                               value_target_loss_fn(dirichlet_targets), w.bc / nd,
                                               grad) /
                      nd;
            }
            if (!neumann_samples.empty()) {
                const double nn = static_cast<double>(neumann_samples.size());
                l_n = loss_gradient_accumulate(
                          net, norm, neumann_pts, DerivMode::first,
                          neumann_loss_fn(setup.material, neumann_samples, neumann_targets),
                          w.bc / nn, grad) /
                      nn;
            }
            const double ni = static_cast<double>(ic_data.points.size());
            l_ic = loss_gradient_accumulate(net, norm, ic_data.points, DerivMode::value,
                                            value_target_loss_fn(ic_data.targets), w.ic / ni,
                                            grad) /
                   ni;
        } catch (const Error& err) {
            result.diverged = true;
            result.divergence_note =
                "window " + std::to_string(window_index) + ", epoch " + std::to_string(epoch) +
                ": " + err.what();
            return result;
        }

        const double l_bc = l_d + l_n;
        const double total = total_loss(w, l_ic, l_bc, l_r);
        result.history.push_back({epoch, l_ic, l_bc, l_r, total});
        if (setup.progress && setup.progress_interval > 0 &&
            (epoch % setup.progress_interval == 0 || epoch + 1 == hy.epochs_per_phase))
            setup.progress(window_index, result.history.back());
        if (!std::isfinite(total)) {
            result.diverged = true;
            result.divergence_note = "window " + std::to_string(window_index) + ", epoch " +
                                     std::to_string(epoch) + ": total loss is non-finite";
            return result;
        }

        adam_step(net, grad, state, hy.adam, hy.lr_at(epoch - warmup));
    }
    return result;
}

InitialConditionData transfer_ic(const WindowSnapshot& snapshot, const DomainSpec& d, int n,
                                 std::uint64_t seed) {
    InitialConditionData data;
    data.points = sample_initial(d, snapshot.t1, n,
                                 seed_stream(seed, kTransferTag,
                                             static_cast<std::uint64_t>(snapshot.index)));
    const Eigen::VectorXd u = forward_batch(snapshot.params, snapshot.norm, data.points);
    data.targets.assign(u.data(), u.data() + u.size());
    return data;
}

std::vector<WindowSnapshot> run_sequential(const TrainSetup& setup, std::uint64_t seed,
                                           const PhaseCallback& on_phase) {
    setup.domain.validate();
    setup.material.validate();
    setup.source.validate();
    setup.hyper.validate();
    setup.counts.validate();
    setup.schedule.validate();

    setup.arch.validate();
    NetworkParams net = init_network(setup.arch, seed);

    InitialConditionData ic;
    ic.points = sample_initial(setup.domain, 0.0, setup.counts.initial,
                               seed_stream(seed, kIc0Tag));
    ic.targets.assign(ic.points.size(), setup.initial_temperature);

    std::vector<WindowSnapshot> snapshots;
    snapshots.reserve(setup.schedule.windows.size());

    for (std::size_t widx = 0; widx < setup.schedule.windows.size(); ++widx) {
        const auto [t0, t1] = setup.schedule.windows[widx];
        TrainResult res = train_window(net, setup, static_cast<int>(widx), t0, t1, ic,
                                       seed_stream(seed, kWindowTag, widx));
        if (res.diverged)
            throw Error("training diverged (" + res.divergence_note + ")");

        WindowSnapshot snap;
        snap.index = static_cast<int>(widx);
        snap.t0 = t0;
        snap.t1 = t1;
        snap.params = net;
        snap.norm = window_normalization(setup, t0, t1);
        if (!res.history.empty()) {
            const LossRecord& last = res.history.back();
            snap.loss_ic = last.ic;
            snap.loss_bc = last.bc;
            snap.loss_r = last.residual;
            snap.loss_total = last.total;
        }
        snapshots.push_back(snap);
        if (on_phase) on_phase(snapshots.back(), res);

        if (widx + 1 < setup.schedule.windows.size())
            ic = transfer_ic(snapshots.back(), setup.domain, setup.counts.initial, seed);
    }
    return snapshots;
}

double query(const std::vector<WindowSnapshot>& snapshots, const SpaceTimePoint& p) {
    if (snapshots.empty()) throw Error("query: no snapshots");
    for (auto it = snapshots.rbegin(); it != snapshots.rend(); ++it)
        if (p.t >= it->t0 && p.t <= it->t1) return forward(it->params, it->norm, p);
    throw Error("query: t = " + std::to_string(p.t) + " outside all windows");
}

void save_snapshot(const std::filesystem::path& path, const WindowSnapshot& snapshot) {
    nlohmann::json header;
    header["format"] = "heatpinn-snapshot-v1";
    header["window_index"] = snapshot.index;
    header["t0"] = snapshot.t0;
    header["t1"] = snapshot.t1;
    header["arch"] = {{"hidden_layers", snapshot.params.arch.hidden_layers},
                      {"hidden_width", snapshot.params.arch.hidden_width}};
    header["norm"] = {
        {"x", {{"scale", snapshot.norm.x.scale}, {"offset", snapshot.norm.x.offset}}},
        {"y", {{"scale", snapshot.norm.y.scale}, {"offset", snapshot.norm.y.offset}}},
        {"t", {{"scale", snapshot.norm.t.scale}, {"offset", snapshot.norm.t.offset}}},
        {"out", {{"scale", snapshot.norm.out.scale}, {"offset", snapshot.norm.out.offset}}}};
    header["loss"] = {{"ic", snapshot.loss_ic},
                      {"bc", snapshot.loss_bc},
                      {"r", snapshot.loss_r},
                      {"total", snapshot.loss_total}};
    const std::vector<double> flat = flatten(snapshot.params);
    header["param_count"] = flat.size();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open snapshot file for writing: " + path.string());
    out << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(flat.data()),
              static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!out) throw Error("failed writing snapshot file: " + path.string());
}

WindowSnapshot load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open snapshot file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error("snapshot file missing header: " + path.string());
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error("snapshot header is not valid JSON: " + std::string(e.what()));
    }
    if (header.value("format", "") != "heatpinn-snapshot-v1")
        throw Error("unsupported snapshot format in " + path.string());

    WindowSnapshot snap;
    snap.index = header.at("window_index").get<int>();
    snap.t0 = header.at("t0").get<double>();
    snap.t1 = header.at("t1").get<double>();
    Architecture arch;
    arch.hidden_layers = header.at("arch").at("hidden_layers").get<int>();
    arch.hidden_width = header.at("arch").at("hidden_width").get<int>();
    arch.validate();
    const auto affine = [&](const char* key) {
        AffineMap m;
        m.scale = header.at("norm").at(key).at("scale").get<double>();
        m.offset = header.at("norm").at(key).at("offset").get<double>();
        return m;
    };
    snap.norm.x = affine("x");
    snap.norm.y = affine("y");
    snap.norm.t = affine("t");
    snap.norm.out = affine("out");
    snap.loss_ic = header.at("loss").at("ic").get<double>();
    snap.loss_bc = header.at("loss").at("bc").get<double>();
    snap.loss_r = header.at("loss").at("r").get<double>();
    snap.loss_total = header.at("loss").at("total").get<double>();

    const std::size_t count = header.at("param_count").get<std::size_t>();
    snap.params = init_network(arch, 0);
    if (count != static_cast<std::size_t>(arch.param_count()))
        throw Error("snapshot param_count does not match architecture");
    std::vector<double> flat(count);
    in.read(reinterpret_cast<char*>(flat.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
        throw Error("snapshot payload truncated: " + path.string());
    unflatten(snap.params, flat);
    snap.params.validate();
    return snap;
}

} // namespace heatpinn
