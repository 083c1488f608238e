#pragma once

#include <cstdint>
#include <vector>

#include "heatpinn/geometry.hpp"

namespace heatpinn {

/// Collocation point counts for one training window.
struct SamplingCounts {
    int interior = 20000;     ///< N_r
    int boundary_per_edge = 1000; ///< N_b per edge
    int initial = 2000;       ///< N_i

    void validate() const;
};

/// One window's collocation sets. Boundary samples carry outward normals
/// and edge tags so Dirichlet and Neumann subsets can be split off.
struct CollocationBatch {
    std::vector<SpaceTimePoint> interior;
    std::vector<BoundarySample> boundary;
    std::vector<SpaceTimePoint> initial;
};

/// n points uniform over the open rectangle interior times [t0, t1].
std::vector<SpaceTimePoint> sample_interior(const DomainSpec& d, double t0, double t1, int n,
                                            std::uint64_t seed);

/// n_per_edge uniform samples on each of the four edges, times in [t0, t1].
std::vector<BoundarySample> sample_boundary(const DomainSpec& d, double t0, double t1,
                                            int n_per_edge, std::uint64_t seed);

/// n uniform interior points, all at time t0.
std::vector<SpaceTimePoint> sample_initial(const DomainSpec& d, double t0, int n,
                                           std::uint64_t seed);

} // namespace heatpinn
