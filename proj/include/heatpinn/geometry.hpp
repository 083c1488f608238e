#pragma once

#include <array>
#include <cmath>
#include <string>

#include "heatpinn/common.hpp"

namespace heatpinn {

/// One space-time sample. Lengths in mm, time in seconds.
struct SpaceTimePoint {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;
};

/// Rectangle corners: A = (0,0), B = (L,0), C = (L,W), D = (0,W).
/// Edge AD is x = 0, AB is y = 0, BC is x = L, CD is y = W.
enum class EdgeId : int { AD = 0, AB = 1, BC = 2, CD = 3 };

constexpr std::array<EdgeId, 4> all_edges = {EdgeId::AD, EdgeId::AB, EdgeId::BC, EdgeId::CD};

std::string edge_name(EdgeId e);
EdgeId edge_from_name(const std::string& name);

struct BoundaryCondition {
    enum class Kind { dirichlet, neumann };
    Kind kind = Kind::neumann;
    /// Temperature (K) for Dirichlet; flux density k grad(u).n (W/mm^2) for Neumann.
    double value = 0.0;
};

/// Straight segment, used for the E-F probe path of the moving source.
struct Segment {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    double length() const { return std::hypot(x1 - x0, y1 - y0); }

    /// Point at arc length s from the start (s in [0, length]).
    std::array<double, 2> at(double s) const {
        const double len = length();
        const double f = len > 0.0 ? s / len : 0.0;
        return {x0 + f * (x1 - x0), y0 + f * (y1 - y0)};
    }
};

/// Rectangular domain with per-edge boundary conditions.
struct DomainSpec {
    double length = 20.0; ///< L, extent in x (mm)
    double width = 10.0;  ///< W, extent in y (mm)

    std::array<BoundaryCondition, 4> bc{}; ///< indexed by EdgeId

    Segment ef_path; ///< probe path; defaults to the horizontal midline

    DomainSpec() { reset_defaults(); }

    /// Paper-style defaults: Dirichlet 298 K on AD, flux 0.001 on the rest,
    /// E-F along y = W/2 from x = 0 to x = L.
    void reset_defaults() {
        bc[0] = {BoundaryCondition::Kind::dirichlet, 298.0};
        bc[1] = {BoundaryCondition::Kind::neumann, 0.001};
        bc[2] = {BoundaryCondition::Kind::neumann, 0.001};
        bc[3] = {BoundaryCondition::Kind::neumann, 0.001};
        ef_path = {0.0, width / 2.0, length, width / 2.0};
    }

    const BoundaryCondition& bc_of(EdgeId e) const { return bc[static_cast<int>(e)]; }
    BoundaryCondition& bc_of(EdgeId e) { return bc[static_cast<int>(e)]; }

    bool contains(double x, double y) const {
        return x >= 0.0 && x <= length && y >= 0.0 && y <= width;
    }
    bool strictly_inside(double x, double y) const {
        return x > 0.0 && x < length && y > 0.0 && y < width;
    }

    /// Outward unit normal of an edge.
    std::array<double, 2> outward_normal(EdgeId e) const {
        switch (e) {
        case EdgeId::AD: return {-1.0, 0.0};
        case EdgeId::AB: return {0.0, -1.0};
        case EdgeId::BC: return {1.0, 0.0};
        case EdgeId::CD: return {0.0, 1.0};
        }
        throw Error("invalid edge id");
    }

    double edge_length(EdgeId e) const {
        return (e == EdgeId::AD || e == EdgeId::BC) ? width : length;
    }

    /// Point on an edge at arc parameter s in [0, edge_length].
    std::array<double, 2> edge_point(EdgeId e, double s) const {
        switch (e) {
        case EdgeId::AD: return {0.0, s};
        case EdgeId::AB: return {s, 0.0};
        case EdgeId::BC: return {length, s};
        case EdgeId::CD: return {s, width};
        }
        throw Error("invalid edge id");
    }

    void validate() const;
};

/// A boundary collocation sample: a point on an edge together with the
/// outward unit normal there and the edge it belongs to.
struct BoundarySample {
    SpaceTimePoint p;
    double nx = 0.0, ny = 0.0;
    EdgeId edge = EdgeId::AD;
};

} // namespace heatpinn
