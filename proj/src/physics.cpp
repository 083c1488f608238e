#include "heatpinn/physics.hpp"

#include <cmath>
#include <numbers>

namespace heatpinn {

void MaterialProps::validate() const {
    if (!(k > 0.0)) throw Error("material.k must be > 0");
    if (!(rho > 0.0)) throw Error("material.rho must be > 0");
    if (!(c > 0.0)) throw Error("material.c must be > 0");
}

void SourceSpec::validate() const {
    if (!(q0 >= 0.0)) throw Error("source.q0 must be >= 0");
    if (!(r0 > 0.0)) throw Error("source.r0 must be > 0");
    if (!std::isfinite(velocity)) throw Error("source.velocity must be finite");
    const double n = std::hypot(dir_x, dir_y);
    if (std::abs(n - 1.0) > 1e-9) throw Error("source.direction must be a unit vector");
}

void LossWeights::validate() const {
    if (!(ic >= 0.0 && bc >= 0.0 && residual >= 0.0))
        throw Error("loss weights must be >= 0");
}

void InitialConditionData::validate(const DomainSpec& d) const {
    if (points.empty()) throw Error("initial-condition data is empty");
    if (points.size() != targets.size())
        throw Error("initial-condition points/targets size mismatch");
    const double t0 = points.front().t;
    for (const auto& p : points) {
        if (p.t != t0) throw Error("initial-condition points must share one time");
        if (!d.contains(p.x, p.y)) throw Error("initial-condition point outside domain");
    }
}

Vec2 source_center(const SourceSpec& src, double t) {
    return {src.start_x + src.velocity * t * src.dir_x,
            src.start_y + src.velocity * t * src.dir_y};
}

double source_value(const SourceSpec& src, const SpaceTimePoint& p) {
    const Vec2 c = source_center(src, p.t);
    const double dx = p.x - c.x;
    const double dy = p.y - c.y;
    return src.q0 * std::exp(-(dx * dx + dy * dy) / (src.r0 * src.r0));
}

double pde_residual(const DerivBundle& b, const MaterialProps& m, double f) {
    return m.gamma() * b.du_dt - m.k * (b.d2u_dx2 + b.d2u_dy2) - f;
}

double warmstart_ansatz(const MaterialProps& m, const SourceSpec& src, double u0,
                        const SpaceTimePoint& p) {
    if (src.q0 <= 0.0) return u0;
    const double grow = 1.0 - std::exp(-std::max(p.t, 0.0) * m.k / (m.gamma() * 4.0 * src.r0 * src.r0));
    if (grow <= 0.0) return u0;

    const Vec2 c = source_center(src, p.t);
    const double dx = p.x - c.x, dy = p.y - c.y;
    const double r = std::max(std::hypot(dx, dy), 0.7 * src.r0); // clamp the K0 singularity
    const double amp = src.q0 * src.r0 * src.r0 / (2.0 * m.k);

    // taper to ambient near the path origin, where the trail has nowhere to
    // have come from (and typically meets a clamped boundary)
    const double sx = p.x - src.start_x, sy = p.y - src.start_y;
    const double along = (sx * src.dir_x + sy * src.dir_y) / (2.0 * src.r0);
    const double taper = 1.0 - std::exp(-along * along);

    const double alpha = m.k / m.gamma();
    const double vh = std::abs(src.velocity) / (2.0 * alpha);
    if (vh * src.r0 < 1e-3) // near-static source: no quasi-steady trail
        return u0 + amp * grow * taper * std::exp(-(dx * dx + dy * dy) / (8.0 * src.r0 * src.r0));

    // signed distance ahead of the center along the direction of motion
    const double xi = (dx * src.dir_x + dy * src.dir_y) * (src.velocity < 0.0 ? -1.0 : 1.0);
    const double z = vh * r;
    // exp(-vh*xi)*K0(z) via the large-z asymptote when K0 would underflow;
    // xi + r >= 0, so the combined exponent never overflows
    const double shape = z > 30.0
                             ? std::sqrt(0.5 * std::numbers::pi / z) * std::exp(-vh * (xi + r))
                             : std::exp(-vh * xi) * std::cyl_bessel_k(0.0, z);
    return u0 + amp * grow * taper * shape;
}

PointLossFn residual_loss_fn(const MaterialProps& m, const SourceSpec& src,
                             std::span<const SpaceTimePoint> batch) {
    const double gamma = m.gamma();
    const double k = m.k;
    return [src, batch, gamma, k](std::size_t i, const DerivBundle& b, BundleSeed& seed) {
        const double r = gamma * b.du_dt - k * (b.d2u_dx2 + b.d2u_dy2) - source_value(src, batch[i]);
        seed.du_dt = 2.0 * r * gamma;
        seed.d2u_dx2 = -2.0 * r * k;
        seed.d2u_dy2 = -2.0 * r * k;
        return r * r;
    };
}

PointLossFn value_target_loss_fn(std::span<const double> targets) {
    return [targets](std::size_t i, const DerivBundle& b, BundleSeed& seed) {
        const double e = b.u - targets[i];
        seed.u = 2.0 * e;
        return e * e;
    };
}

PointLossFn neumann_loss_fn(const MaterialProps& m, std::span<const BoundarySample> samples,
                            std::span<const double> flux_targets) {
    const double k = m.k;
    return [k, samples, flux_targets](std::size_t i, const DerivBundle& b, BundleSeed& seed) {
        const BoundarySample& s = samples[i];
        const double e = k * (b.du_dx * s.nx + b.du_dy * s.ny) - flux_targets[i];
        seed.du_dx = 2.0 * e * k * s.nx;
        seed.du_dy = 2.0 * e * k * s.ny;
        return e * e;
    };
}

double residual_loss(const NetworkParams& net, const Normalization& norm, const MaterialProps& m,
                     const SourceSpec& src, std::span<const SpaceTimePoint> batch) {
    const double sum = loss_value(net, norm, batch, DerivMode::full, residual_loss_fn(m, src, batch));
    return sum / static_cast<double>(batch.size());
}

double ic_loss(const NetworkParams& net, const Normalization& norm,
               const InitialConditionData& data) {
    if (data.points.empty()) throw Error("ic_loss: empty data");
    const double sum = loss_value(net, norm, data.points, DerivMode::value,
                                  value_target_loss_fn(data.targets));
    return sum / static_cast<double>(data.points.size());
}

double bc_loss_dirichlet(const NetworkParams& net, const Normalization& norm,
                         std::span<const SpaceTimePoint> batch, std::span<const double> targets) {
    if (batch.size() != targets.size())
        throw Error("bc_loss_dirichlet: points/targets size mismatch");
    const double sum =
        loss_value(net, norm, batch, DerivMode::value, value_target_loss_fn(targets));
    return sum / static_cast<double>(batch.size());
}

double bc_loss_neumann(const NetworkParams& net, const Normalization& norm,
                       const MaterialProps& m, std::span<const BoundarySample> samples,
                       std::span<const double> flux_targets) {
    if (samples.size() != flux_targets.size())
        throw Error("bc_loss_neumann: samples/targets size mismatch");
    std::vector<SpaceTimePoint> pts;
    pts.reserve(samples.size());
    for (const auto& s : samples) {
        if (std::abs(std::hypot(s.nx, s.ny) - 1.0) > 1e-9)
            throw Error("bc_loss_neumann: non-unit normal");
        pts.push_back(s.p);
    }
    const double sum = loss_value(net, norm, pts, DerivMode::first,
                                  neumann_loss_fn(m, samples, flux_targets));
    return sum / static_cast<double>(samples.size());
}

double total_loss(const LossWeights& w, double l_ic, double l_bc, double l_r) {
    return w.ic * l_ic + w.bc * l_bc + w.residual * l_r;
}

} // namespace heatpinn
