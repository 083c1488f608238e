#pragma once

#include <span>
#include <vector>

#include "heatpinn/autodiff.hpp"
#include "heatpinn/geometry.hpp"
#include "heatpinn/network.hpp"

namespace heatpinn {

/// Material constants of the conductor. Units: k in W/mm/degC, rho in
/// kg/mm^3, c in J/kg/degC; gamma = rho*c is the volumetric heat capacity
/// multiplying du/dt in the governing equation.
struct MaterialProps {
    double k = 0.025;
    double rho = 7.6e-6;
    double c = 658.0;

    double gamma() const { return rho * c; }
    void validate() const;
};

/// Moving Gaussian heat source f(x,t) = q0 * exp(-r^2 / r0^2), centered at
/// start + velocity * t * direction.
struct SourceSpec {
    double q0 = 5.0;       // W/mm^3
    double r0 = 1.0;       // mm
    double velocity = 2.0; // mm/s
    double start_x = 0.0, start_y = 5.0;
    double dir_x = 1.0, dir_y = 0.0;

    void validate() const;
};

struct LossWeights {
    double ic = 250.0;
    double bc = 250.0;
    double residual = 1000.0;

    void validate() const;
};

/// Pointwise initial-condition targets: u(points[i]) should equal
/// targets[i]; all points share the window start time.
struct InitialConditionData {
    std::vector<SpaceTimePoint> points;
    std::vector<double> targets;

    void validate(const DomainSpec& d) const;
};

struct Vec2 {
    double x = 0.0, y = 0.0;
};

Vec2 source_center(const SourceSpec& src, double t);
double source_value(const SourceSpec& src, const SpaceTimePoint& p);

/// Closed-form guess of the temperature field used to warm-start first-window
/// training: the quasi-steady thin-plate solution for a moving point source
/// (amplitude q0*r0^2/(2k), exponential front / Bessel-K0 trail), gated by a
/// diffusion-time growth factor so it vanishes at t <= 0 and tapered to the
/// ambient value u0 near the path origin where the quasi-steady form is
/// invalid. Falls back to a static Gaussian bump when the source barely moves.
/// This is a training aid, not a solution: it only needs to be close enough
/// that the PDE loss refines it instead of collapsing to the trivial field.
double warmstart_ansatz(const MaterialProps& m, const SourceSpec& src, double u0,
                        const SpaceTimePoint& p);

/// Heat-equation defect gamma*du/dt - k*(uxx + uyy) - f at a single point.
double pde_residual(const DerivBundle& b, const MaterialProps& m, double f);

/// Per-point loss callbacks for the shared value/gradient driver. Each
/// returns the squared per-point contribution and fills the bundle seed with
/// its derivative. Spans are captured by reference: keep the underlying
/// storage alive for the duration of the loss evaluation.
PointLossFn residual_loss_fn(const MaterialProps& m, const SourceSpec& src,
                             std::span<const SpaceTimePoint> batch);
PointLossFn value_target_loss_fn(std::span<const double> targets);
PointLossFn neumann_loss_fn(const MaterialProps& m, std::span<const BoundarySample> samples,
                            std::span<const double> flux_targets);

/// Batch losses (means of the squared per-point terms).
double residual_loss(const NetworkParams& net, const Normalization& norm, const MaterialProps& m,
                     const SourceSpec& src, std::span<const SpaceTimePoint> batch);
double ic_loss(const NetworkParams& net, const Normalization& norm,
               const InitialConditionData& data);
double bc_loss_dirichlet(const NetworkParams& net, const Normalization& norm,
                         std::span<const SpaceTimePoint> batch, std::span<const double> targets);
double bc_loss_neumann(const NetworkParams& net, const Normalization& norm,
                       const MaterialProps& m, std::span<const BoundarySample> samples,
                       std::span<const double> flux_targets);

double total_loss(const LossWeights& w, double l_ic, double l_bc, double l_r);

} // namespace heatpinn
