#pragma once

#include <functional>
#include <span>

#include "heatpinn/network.hpp"

namespace heatpinn {

/// Network output and its input derivatives at one space-time point.
/// Units: u in K, first derivatives K/s and K/mm, second derivatives K/mm^2.
struct DerivBundle {
    double u = 0.0;
    double du_dt = 0.0;
    double du_dx = 0.0;
    double du_dy = 0.0;
    double d2u_dx2 = 0.0;
    double d2u_dy2 = 0.0;

    bool all_finite() const;
};

/// Adjoint seed: partial derivatives of a scalar objective with respect to
/// each bundle entry.
struct BundleSeed {
    double u = 0.0;
    double du_dt = 0.0;
    double du_dx = 0.0;
    double du_dy = 0.0;
    double d2u_dx2 = 0.0;
    double d2u_dy2 = 0.0;
};

/// Buffer congruent with a network's parameters (one gradient or moment
/// entry per weight/bias).
struct ParamGradient {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    static ParamGradient zeros_like(const NetworkParams& net);
    void set_zero();
    void add_scaled(const ParamGradient& other, double factor);
    bool all_finite() const;
    bool congruent_with(const NetworkParams& net) const;

    double squared_norm() const;
};

/// Which derivative channels a pass propagates.
enum class DerivMode {
    value, ///< u only
    first, ///< u plus du/dt, du/dx, du/dy
    full   ///< all entries including d2u/dx2 and d2u/dy2
};

/// Exact derivatives of the raw network (identity normalization).
DerivBundle eval_with_input_derivs(const NetworkParams& net, const SpaceTimePoint& p);

/// Exact derivatives of the normalized network u = denorm(MLP(norm(p))),
/// chain-rule factors of the affine maps included. The u entry matches
/// forward() bit-exactly.
DerivBundle eval_with_input_derivs(const NetworkParams& net, const Normalization& norm,
                                   const SpaceTimePoint& p);

/// Batched bundle evaluation. Channels not requested by `mode` are zero.
void eval_bundles(const NetworkParams& net, const Normalization& norm,
                  std::span<const SpaceTimePoint> pts, DerivMode mode,
                  std::span<DerivBundle> out);

/// Per-point objective callback: returns the loss contribution of point i and
/// fills `seed` with its partial derivatives w.r.t. the bundle entries.
using PointLossFn = std::function<double(std::size_t i, const DerivBundle& b, BundleSeed& seed)>;

struct LossGradResult {
    double value = 0.0;
    ParamGradient grad;
};

/// Total objective value over the batch (no gradient).
double loss_value(const NetworkParams& net, const Normalization& norm,
                  std::span<const SpaceTimePoint> batch, DerivMode mode, const PointLossFn& fn);

/// Objective value plus its exact parameter gradient, reverse-accumulated
/// through the forward derivative recurrence. Deterministic for a fixed batch:
/// points are processed in blocks of fixed size and reduced in index order.
LossGradResult loss_gradient(const NetworkParams& net, const Normalization& norm,
                             std::span<const SpaceTimePoint> batch, DerivMode mode,
                             const PointLossFn& fn);

/// As above, accumulating `factor * grad` into an existing buffer and
/// returning the objective value. Used to combine weighted loss terms
/// without intermediate allocations.
double loss_gradient_accumulate(const NetworkParams& net, const Normalization& norm,
                                std::span<const SpaceTimePoint> batch, DerivMode mode,
                                const PointLossFn& fn, double factor, ParamGradient& accum);

} // namespace heatpinn
