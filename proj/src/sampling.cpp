#include "heatpinn/sampling.hpp"

namespace heatpinn {

namespace {
// Tags separating the sampling substreams of one base seed.
constexpr std::uint64_t kInteriorTag = 0x696e7472ULL; // "intr"
constexpr std::uint64_t kBoundaryTag = 0x626f756eULL; // "boun"
constexpr std::uint64_t kInitialTag = 0x696e6974ULL;  // "init"
} // namespace

void SamplingCounts::validate() const {
    if (interior <= 0) throw Error("sampling.interior must be > 0");
    if (boundary_per_edge <= 0) throw Error("sampling.boundary_per_edge must be > 0");
    if (initial <= 0) throw Error("sampling.initial must be > 0");
}

std::vector<SpaceTimePoint> sample_interior(const DomainSpec& d, double t0, double t1, int n,
                                            std::uint64_t seed) {
    if (!(t1 > t0)) throw Error("sample_interior: window end must exceed start");
    if (n <= 0) throw Error("sample_interior: count must be > 0");
    Rng rng(seed_stream(seed, kInteriorTag));
    std::vector<SpaceTimePoint> pts(static_cast<std::size_t>(n));
    for (auto& p : pts) {
        p.x = rng.uniform(0.0, d.length);
        p.y = rng.uniform(0.0, d.width);
        p.t = rng.uniform_closed(t0, t1);
    }
    return pts;
}

std::vector<BoundarySample> sample_boundary(const DomainSpec& d, double t0, double t1,
                                            int n_per_edge, std::uint64_t seed) {
    if (!(t1 > t0)) throw Error("sample_boundary: window end must exceed start");
    if (n_per_edge <= 0) throw Error("sample_boundary: count must be > 0");
    std::vector<BoundarySample> out;
    out.reserve(4 * static_cast<std::size_t>(n_per_edge));
    for (EdgeId e : all_edges) {
        Rng rng(seed_stream(seed, kBoundaryTag, static_cast<std::uint64_t>(e)));
        const auto normal = d.outward_normal(e);
        const double len = d.edge_length(e);
        for (int i = 0; i < n_per_edge; ++i) {
            BoundarySample s;
            const auto xy = d.edge_point(e, rng.uniform(0.0, len));
            s.p = {xy[0], xy[1], rng.uniform_closed(t0, t1)};
            s.nx = normal[0];
            s.ny = normal[1];
            s.edge = e;
            out.push_back(s);
        }
    }
    return out;
}

std::vector<SpaceTimePoint> sample_initial(const DomainSpec& d, double t0, int n,
                                           std::uint64_t seed) {
    if (n <= 0) throw Error("sample_initial: count must be > 0");
    Rng rng(seed_stream(seed, kInitialTag));
    std::vector<SpaceTimePoint> pts(static_cast<std::size_t>(n));
    for (auto& p : pts) {
        p.x = rng.uniform(0.0, d.length);
        p.y = rng.uniform(0.0, d.width);
        p.t = t0;
    }
    return pts;
}

} // namespace heatpinn
