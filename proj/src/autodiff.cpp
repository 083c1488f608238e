#include "heatpinn/autodiff.hpp"

#include <cmath>
#include <sstream>

namespace heatpinn {

namespace {

// First-derivative channels are ordered t, x, y; second-derivative channels
// x, y. Points enter the network as rows (xhat, yhat, that).
constexpr int kFirstChannels = 3;
constexpr int kSecondChannels = 2;
constexpr int kBlock = 256;

inline int input_row(int first_channel) {
    // t -> row 2, x -> row 0, y -> row 1
    return first_channel == 0 ? 2 : first_channel - 1;
}

inline double input_scale(const Normalization& norm, int first_channel) {
    switch (first_channel) {
    case 0: return norm.t.scale;
    case 1: return norm.x.scale;
    default: return norm.y.scale;
    }
}

// second channel index -> corresponding first channel (x -> x, y -> y)
inline int first_of_second(int second_channel) { return second_channel + 1; }

/// Per-block state of the layered forward pass. Layer k in 1..H holds the
/// post-activation values A[k] plus, per derivative channel, the
/// pre-activation (Zd, Zdd) and post-activation (Gd, Hd) derivative vectors:
///
///   z   = W a' + b          zd  = W gd'         zdd = W hd'
///   a   = tanh(z)           s   = 1 - a^2
///   gd  = s . zd            hd  = s . zdd - 2 a s . zd . zd
///
/// The reverse pass differentiates this recurrence exactly.
struct Workspace {
    int H = -1, W = -1, cap = 0;

    std::vector<Eigen::MatrixXd> A;
    std::vector<std::array<Eigen::MatrixXd, kFirstChannels>> Zd, Gd;
    std::vector<std::array<Eigen::MatrixXd, kSecondChannels>> Zdd, Hd;

    Eigen::RowVectorXd y;
    std::array<Eigen::RowVectorXd, kFirstChannels> yd;
    std::array<Eigen::RowVectorXd, kSecondChannels> ydd;

    // adjoint buffers
    Eigen::MatrixXd Abar, Zbar;
    std::array<Eigen::MatrixXd, kFirstChannels> Gbar, Zdbar;
    std::array<Eigen::MatrixXd, kSecondChannels> Hbar, Zddbar;
    Eigen::RowVectorXd ybar;
    std::array<Eigen::RowVectorXd, kFirstChannels> ydbar;
    std::array<Eigen::RowVectorXd, kSecondChannels> yddbar;

    // elementwise temporaries
    Eigen::MatrixXd S, AS, T;

    void ensure(int hidden_layers, int width, int n) {
        if (hidden_layers == H && width == W && n <= cap) return;
        H = hidden_layers;
        W = width;
        cap = std::max(n, kBlock);
        A.assign(H + 1, Eigen::MatrixXd());
        A[0].resize(Architecture::input_dim, cap);
        Zd.assign(H + 1, {});
        Gd.assign(H + 1, {});
        Zdd.assign(H + 1, {});
        Hd.assign(H + 1, {});
        for (int k = 1; k <= H; ++k) {
            A[k].resize(W, cap);
            for (auto& m : Zd[k]) m.resize(W, cap);
            for (auto& m : Gd[k]) m.resize(W, cap);
            for (auto& m : Zdd[k]) m.resize(W, cap);
            for (auto& m : Hd[k]) m.resize(W, cap);
        }
        y.resize(cap);
        for (auto& r : yd) r.resize(cap);
        for (auto& r : ydd) r.resize(cap);
        Abar.resize(W, cap);
        Zbar.resize(W, cap);
        for (auto& m : Gbar) m.resize(W, cap);
        for (auto& m : Zdbar) m.resize(W, cap);
        for (auto& m : Hbar) m.resize(W, cap);
        for (auto& m : Zddbar) m.resize(W, cap);
        ybar.resize(cap);
        for (auto& r : ydbar) r.resize(cap);
        for (auto& r : yddbar) r.resize(cap);
        S.resize(W, cap);
        AS.resize(W, cap);
        T.resize(W, cap);
    }
};

Workspace& workspace() {
    thread_local Workspace ws;
    return ws;
}

[[noreturn]] void throw_layer_error(int layer) {
    throw Error("autodiff: non-finite value at layer " + std::to_string(layer));
}

void forward_block(const NetworkParams& net, const Normalization& norm, const SpaceTimePoint* pts,
                   int n, DerivMode mode, Workspace& ws) {
    const Architecture& arch = net.arch;
    const int H = arch.hidden_layers;
    ws.ensure(H, arch.hidden_width, n);

    auto in = ws.A[0].leftCols(n);
    for (int j = 0; j < n; ++j) {
        in(0, j) = norm.x.apply(pts[j].x);
        in(1, j) = norm.y.apply(pts[j].y);
        in(2, j) = norm.t.apply(pts[j].t);
    }

    const bool want_first = mode != DerivMode::value;
    const bool want_second = mode == DerivMode::full;

    for (int k = 1; k <= H; ++k) {
        const Eigen::MatrixXd& wk = net.weights[k - 1];
        auto a = ws.A[k].leftCols(n);
        a.noalias() = wk * ws.A[k - 1].leftCols(n);
        a.colwise() += net.biases[k - 1];

        if (want_first) {
            for (int c = 0; c < kFirstChannels; ++c) {
                auto zd = ws.Zd[k][c].leftCols(n);
                if (k == 1) {
                    // input derivative is the constant normalization scale
                    zd.colwise() = (input_scale(norm, c) * wk.col(input_row(c))).eval();
                } else {
                    zd.noalias() = wk * ws.Gd[k - 1][c].leftCols(n);
                }
            }
        }
        if (want_second) {
            for (int c = 0; c < kSecondChannels; ++c) {
                auto zdd = ws.Zdd[k][c].leftCols(n);
                if (k == 1) {
                    zdd.setZero();
                } else {
                    zdd.noalias() = wk * ws.Hd[k - 1][c].leftCols(n);
                }
            }
        }

        a = a.array().tanh();
        if (!a.allFinite()) throw_layer_error(k - 1);

        if (want_first || want_second) {
            ws.S.leftCols(n).array() = 1.0 - a.array().square();
        }
        if (want_first) {
            for (int c = 0; c < kFirstChannels; ++c)
                ws.Gd[k][c].leftCols(n).array() =
                    ws.S.leftCols(n).array() * ws.Zd[k][c].leftCols(n).array();
        }
        if (want_second) {
            ws.AS.leftCols(n).array() = a.array() * ws.S.leftCols(n).array();
            for (int c = 0; c < kSecondChannels; ++c) {
                const auto zd = ws.Zd[k][first_of_second(c)].leftCols(n).array();
                ws.Hd[k][c].leftCols(n).array() =
                    ws.S.leftCols(n).array() * ws.Zdd[k][c].leftCols(n).array() -
                    2.0 * ws.AS.leftCols(n).array() * zd.square();
            }
        }
    }

    const Eigen::MatrixXd& wout = net.weights[H];
    ws.y.head(n).noalias() = wout * ws.A[H].leftCols(n);
    ws.y.head(n).array() += net.biases[H][0];
    if (!ws.y.head(n).allFinite()) throw_layer_error(H);
    if (want_first)
        for (int c = 0; c < kFirstChannels; ++c)
            ws.yd[c].head(n).noalias() = wout * ws.Gd[H][c].leftCols(n);
    if (want_second)
        for (int c = 0; c < kSecondChannels; ++c)
            ws.ydd[c].head(n).noalias() = wout * ws.Hd[H][c].leftCols(n);
}

void extract_bundles(const Workspace& ws, const Normalization& norm, int n, DerivMode mode,
                     DerivBundle* out) {
    const double os = norm.out.scale;
    for (int j = 0; j < n; ++j) {
        DerivBundle b;
        b.u = norm.out.apply(ws.y[j]);
        if (mode != DerivMode::value) {
            b.du_dt = os * ws.yd[0][j];
            b.du_dx = os * ws.yd[1][j];
            b.du_dy = os * ws.yd[2][j];
        }
        if (mode == DerivMode::full) {
            b.d2u_dx2 = os * ws.ydd[0][j];
            b.d2u_dy2 = os * ws.ydd[1][j];
        }
        out[j] = b;
    }
}

/// Reverse sweep over the stored block state, accumulating parameter
/// adjoints. Seeds must already carry any overall scaling factor.
void backward_block(const NetworkParams& net, const Normalization& norm, int n, DerivMode mode,
                    Workspace& ws, ParamGradient& grad) {
    const Architecture& arch = net.arch;
    const int H = arch.hidden_layers;
    const bool want_first = mode != DerivMode::value;
    const bool want_second = mode == DerivMode::full;

    const Eigen::MatrixXd& wout = net.weights[H];

    // output layer: y = W a + b, yd = W gd, ydd = W hd (all linear)
    grad.weights[H].noalias() += ws.ybar.head(n) * ws.A[H].leftCols(n).transpose();
    grad.biases[H][0] += ws.ybar.head(n).sum();
    ws.Abar.leftCols(n).noalias() = wout.transpose() * ws.ybar.head(n);
    if (want_first)
        for (int c = 0; c < kFirstChannels; ++c) {
            grad.weights[H].noalias() += ws.ydbar[c].head(n) * ws.Gd[H][c].leftCols(n).transpose();
            ws.Gbar[c].leftCols(n).noalias() = wout.transpose() * ws.ydbar[c].head(n);
        }
    if (want_second)
        for (int c = 0; c < kSecondChannels; ++c) {
            grad.weights[H].noalias() += ws.yddbar[c].head(n) * ws.Hd[H][c].leftCols(n).transpose();
            ws.Hbar[c].leftCols(n).noalias() = wout.transpose() * ws.yddbar[c].head(n);
        }

    for (int k = H; k >= 1; --k) {
        const auto a = ws.A[k].leftCols(n).array();
        auto s = ws.S.leftCols(n).array();
        s = 1.0 - a.square();

        auto zbar = ws.Zbar.leftCols(n).array();
        zbar = ws.Abar.leftCols(n).array() * s;

        if (want_first) {
            ws.AS.leftCols(n).array() = a * s;
            const auto as = ws.AS.leftCols(n).array();
            for (int c = 0; c < kFirstChannels; ++c) {
                const auto zd = ws.Zd[k][c].leftCols(n).array();
                const auto gbar = ws.Gbar[c].leftCols(n).array();
                zbar -= 2.0 * gbar * as * zd;
                ws.Zdbar[c].leftCols(n).array() = gbar * s;
            }
            if (want_second) {
                for (int c = 0; c < kSecondChannels; ++c) {
                    const int fc = first_of_second(c);
                    const auto zd = ws.Zd[k][fc].leftCols(n).array();
                    const auto zdd = ws.Zdd[k][c].leftCols(n).array();
                    const auto hbar = ws.Hbar[c].leftCols(n).array();
                    // d(hd)/dz = -2 a s zdd - 2 s (1 - 3 a^2) zd^2
                    ws.T.leftCols(n).array() = 1.0 - 3.0 * a.square();
                    zbar -= hbar * (2.0 * as * zdd +
                                    2.0 * s * ws.T.leftCols(n).array() * zd.square());
                    ws.Zdbar[fc].leftCols(n).array() -= 4.0 * hbar * as * zd;
                    ws.Zddbar[c].leftCols(n).array() = hbar * s;
                }
            }
        }

        const Eigen::MatrixXd& wk = net.weights[k - 1];
        grad.weights[k - 1].noalias() += ws.Zbar.leftCols(n) * ws.A[k - 1].leftCols(n).transpose();
        grad.biases[k - 1].noalias() += ws.Zbar.leftCols(n).rowwise().sum();

        if (k > 1) {
            if (want_first)
                for (int c = 0; c < kFirstChannels; ++c)
                    grad.weights[k - 1].noalias() +=
                        ws.Zdbar[c].leftCols(n) * ws.Gd[k - 1][c].leftCols(n).transpose();
            if (want_second)
                for (int c = 0; c < kSecondChannels; ++c)
                    grad.weights[k - 1].noalias() +=
                        ws.Zddbar[c].leftCols(n) * ws.Hd[k - 1][c].leftCols(n).transpose();

            ws.Abar.leftCols(n).noalias() = wk.transpose() * ws.Zbar.leftCols(n);
            if (want_first)
                for (int c = 0; c < kFirstChannels; ++c)
                    ws.Gbar[c].leftCols(n).noalias() = wk.transpose() * ws.Zdbar[c].leftCols(n);
            if (want_second)
                for (int c = 0; c < kSecondChannels; ++c)
                    ws.Hbar[c].leftCols(n).noalias() = wk.transpose() * ws.Zddbar[c].leftCols(n);
        } else if (want_first) {
            // Input layer: the first-derivative feed is the constant column
            // scale * e_row, so only one weight column per channel is touched.
            // Second-derivative feeds vanish (affine input maps).
            for (int c = 0; c < kFirstChannels; ++c)
                grad.weights[0].col(input_row(c)).noalias() +=
                    input_scale(norm, c) * ws.Zdbar[c].leftCols(n).rowwise().sum();
        }
    }
}

} // namespace

bool DerivBundle::all_finite() const {
    return std::isfinite(u) && std::isfinite(du_dt) && std::isfinite(du_dx) &&
           std::isfinite(du_dy) && std::isfinite(d2u_dx2) && std::isfinite(d2u_dy2);
}

ParamGradient ParamGradient::zeros_like(const NetworkParams& net) {
    ParamGradient g;
    g.weights.reserve(net.weights.size());
    g.biases.reserve(net.biases.size());
    for (std::size_t k = 0; k < net.weights.size(); ++k) {
        g.weights.push_back(Eigen::MatrixXd::Zero(net.weights[k].rows(), net.weights[k].cols()));
        g.biases.push_back(Eigen::VectorXd::Zero(net.biases[k].size()));
    }
    return g;
}

void ParamGradient::set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
}

void ParamGradient::add_scaled(const ParamGradient& other, double factor) {
    for (std::size_t k = 0; k < weights.size(); ++k) {
        weights[k] += factor * other.weights[k];
        biases[k] += factor * other.biases[k];
    }
}

bool ParamGradient::all_finite() const {
    for (const auto& w : weights)
        if (!w.allFinite()) return false;
    for (const auto& b : biases)
        if (!b.allFinite()) return false;
    return true;
}

bool ParamGradient::congruent_with(const NetworkParams& net) const {
    if (weights.size() != net.weights.size() || biases.size() != net.biases.size()) return false;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k].rows() != net.weights[k].rows() ||
            weights[k].cols() != net.weights[k].cols())
            return false;
        if (biases[k].size() != net.biases[k].size()) return false;
    }
    return true;
}

double ParamGradient::squared_norm() const {
    double s = 0.0;
    for (const auto& w : weights) s += w.squaredNorm();
    for (const auto& b : biases) s += b.squaredNorm();
    return s;
}

DerivBundle eval_with_input_derivs(const NetworkParams& net, const SpaceTimePoint& p) {
    return eval_with_input_derivs(net, Normalization::identity(), p);
}

DerivBundle eval_with_input_derivs(const NetworkParams& net, const Normalization& norm,
                                   const SpaceTimePoint& p) {
    if (!(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.t)))
        throw Error("autodiff: non-finite evaluation point");
    DerivBundle b;
    eval_bundles(net, norm, std::span<const SpaceTimePoint>(&p, 1), DerivMode::full,
                 std::span<DerivBundle>(&b, 1));
    return b;
}

void eval_bundles(const NetworkParams& net, const Normalization& norm,
                  std::span<const SpaceTimePoint> pts, DerivMode mode,
                  std::span<DerivBundle> out) {
    if (out.size() != pts.size()) throw Error("eval_bundles: output span size mismatch");
    Workspace& ws = workspace();
    for (std::size_t start = 0; start < pts.size(); start += kBlock) {
        const int n = static_cast<int>(std::min<std::size_t>(kBlock, pts.size() - start));
        forward_block(net, norm, pts.data() + start, n, mode, ws);
        extract_bundles(ws, norm, n, mode, out.data() + start);
    }
}

namespace {

double run_loss(const NetworkParams& net, const Normalization& norm,
                std::span<const SpaceTimePoint> batch, DerivMode mode, const PointLossFn& fn,
                double factor, ParamGradient* accum) {
    if (batch.empty()) throw Error("loss over empty batch");
    Workspace& ws = workspace();
    std::vector<DerivBundle> bundles(kBlock);
    double total = 0.0;
    const double os = norm.out.scale;

    for (std::size_t start = 0; start < batch.size(); start += kBlock) {
        const int n = static_cast<int>(std::min<std::size_t>(kBlock, batch.size() - start));
        forward_block(net, norm, batch.data() + start, n, mode, ws);
        extract_bundles(ws, norm, n, mode, bundles.data());

        double block_sum = 0.0;
        for (int j = 0; j < n; ++j) {
            const std::size_t i = start + j;
            BundleSeed seed;
            const double value = fn(i, bundles[j], seed);
            if (!std::isfinite(value)) {
                const SpaceTimePoint& p = batch[i];
                std::ostringstream msg;
                msg << "loss: non-finite contribution at collocation point " << i << " (x=" << p.x
                    << ", y=" << p.y << ", t=" << p.t << ")";
                throw Error(msg.str());
            }
            block_sum += value;
            if (accum) {
                ws.ybar[j] = factor * os * seed.u;
                if (mode != DerivMode::value) {
                    ws.ydbar[0][j] = factor * os * seed.du_dt;
                    ws.ydbar[1][j] = factor * os * seed.du_dx;
                    ws.ydbar[2][j] = factor * os * seed.du_dy;
                }
                if (mode == DerivMode::full) {
                    ws.yddbar[0][j] = factor * os * seed.d2u_dx2;
                    ws.yddbar[1][j] = factor * os * seed.d2u_dy2;
                }
            }
        }
        total += block_sum;
        if (accum) backward_block(net, norm, n, mode, ws, *accum);
    }
    return total;
}

} // namespace

double loss_value(const NetworkParams& net, const Normalization& norm,
                  std::span<const SpaceTimePoint> batch, DerivMode mode, const PointLossFn& fn) {
    return run_loss(net, norm, batch, mode, fn, 1.0, nullptr);
}

LossGradResult loss_gradient(const NetworkParams& net, const Normalization& norm,
                             std::span<const SpaceTimePoint> batch, DerivMode mode,
                             const PointLossFn& fn) {
    LossGradResult res;
    res.grad = ParamGradient::zeros_like(net);
    res.value = run_loss(net, norm, batch, mode, fn, 1.0, &res.grad);
    return res;
}

double loss_gradient_accumulate(const NetworkParams& net, const Normalization& norm,
                                std::span<const SpaceTimePoint> batch, DerivMode mode,
                                const PointLossFn& fn, double factor, ParamGradient& accum) {
    if (!accum.congruent_with(net)) throw Error("loss_gradient: gradient buffer not congruent");
    return run_loss(net, norm, batch, mode, fn, factor, &accum);
}

} // namespace heatpinn
