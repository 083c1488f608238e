#include "heatpinn/network.hpp"

#include <cctype>
#include <cmath>

#include "heatpinn/autodiff.hpp"

namespace heatpinn {

void Architecture::validate() const {
    if (hidden_layers < 1) throw Error("architecture: hidden_layers must be >= 1");
    if (hidden_width < 1) throw Error("architecture: hidden_width must be >= 1");
}

int Architecture::param_count() const {
    int n = 0;
    for (int k = 0; k < layer_count(); ++k) n += layer_rows(k) * (layer_cols(k) + 1);
    return n;
}

void NetworkParams::validate() const {
    arch.validate();
    const int layers = arch.layer_count();
    if (static_cast<int>(weights.size()) != layers || static_cast<int>(biases.size()) != layers)
        throw Error("network: layer count does not match architecture");
    for (int k = 0; k < layers; ++k) {
        if (weights[k].rows() != arch.layer_rows(k) || weights[k].cols() != arch.layer_cols(k))
            throw Error("network: weight shape mismatch at layer " + std::to_string(k));
        if (biases[k].size() != arch.layer_rows(k))
            throw Error("network: bias shape mismatch at layer " + std::to_string(k));
        if (!weights[k].allFinite() || !biases[k].allFinite())
            throw Error("network: non-finite parameter at layer " + std::to_string(k));
    }
}

void Normalization::validate() const {
    for (const AffineMap* m : {&x, &y, &t, &out})
        if (m->scale == 0.0 || !std::isfinite(m->scale) || !std::isfinite(m->offset))
            throw Error("normalization: map scale must be nonzero and finite");
}

Normalization Normalization::for_window(const DomainSpec& d, double t0, double t1,
                                        double out_scale, double out_offset) {
    if (!(t1 > t0)) throw Error("normalization: window must satisfy t1 > t0");
    Normalization n;
    n.x = {2.0 / d.length, -1.0};
    n.y = {2.0 / d.width, -1.0};
    n.t = {2.0 / (t1 - t0), -1.0 - 2.0 * t0 / (t1 - t0)};
    n.out = {out_scale, out_offset};
    n.validate();
    return n;
}

NetworkParams init_network(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    NetworkParams net;
    net.arch = arch;
    Rng rng(seed_stream(seed, 0x696e6974));
    for (int k = 0; k < arch.layer_count(); ++k) {
        const int rows = arch.layer_rows(k);
        const int cols = arch.layer_cols(k);
        const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
        Eigen::MatrixXd w(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) w(i, j) = rng.uniform(-limit, limit);
        net.weights.push_back(std::move(w));
        net.biases.push_back(Eigen::VectorXd::Zero(rows));
    }
    return net;
}

double forward(const NetworkParams& net, const Normalization& norm, const SpaceTimePoint& p) {
    // Same code path as the derivative evaluation, value channel only, so the
    // two agree bit-exactly.
    DerivBundle b;
    eval_bundles(net, norm, std::span<const SpaceTimePoint>(&p, 1), DerivMode::value,
                 std::span<DerivBundle>(&b, 1));
    return b.u;
}

Eigen::VectorXd forward_batch(const NetworkParams& net, const Normalization& norm,
                              std::span<const SpaceTimePoint> pts) {
    std::vector<DerivBundle> bundles(pts.size());
    eval_bundles(net, norm, pts, DerivMode::value, bundles);
    Eigen::VectorXd out(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) out[static_cast<Eigen::Index>(i)] = bundles[i].u;
    return out;
}

std::vector<double> flatten(const NetworkParams& net) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(net.arch.param_count()));
    for (std::size_t k = 0; k < net.weights.size(); ++k) {
        const Eigen::MatrixXd& w = net.weights[k];
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) flat.push_back(w(i, j));
        for (Eigen::Index i = 0; i < net.biases[k].size(); ++i) flat.push_back(net.biases[k][i]);
    }
    return flat;
}

void unflatten(NetworkParams& net, std::span<const double> flat) {
    if (static_cast<int>(flat.size()) != net.arch.param_count())
        throw Error("unflatten: payload size does not match architecture");
    std::size_t pos = 0;
    for (std::size_t k = 0; k < net.weights.size(); ++k) {
        Eigen::MatrixXd& w = net.weights[k];
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = flat[pos++];
        for (Eigen::Index i = 0; i < net.biases[k].size(); ++i) net.biases[k][i] = flat[pos++];
    }
}

void DomainSpec::validate() const {
    if (!(length > 0.0) || !(width > 0.0)) throw Error("domain: length and width must be > 0");
    bool has_any = false;
    for (EdgeId e : all_edges) {
        const BoundaryCondition& c = bc_of(e);
        if (!std::isfinite(c.value)) throw Error("domain: boundary value must be finite");
        has_any = true;
    }
    (void)has_any;
    if (ef_path.length() <= 0.0) throw Error("domain: E-F path must have positive length");
}

std::string edge_name(EdgeId e) {
    switch (e) {
    case EdgeId::AD: return "AD";
    case EdgeId::AB: return "AB";
    case EdgeId::BC: return "BC";
    case EdgeId::CD: return "CD";
    }
    throw Error("invalid edge id");
}

EdgeId edge_from_name(const std::string& name) {
    std::string upper = name;
    for (char& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    for (EdgeId e : all_edges)
        if (edge_name(e) == upper) return e;
    throw Error("unknown edge name '" + name + "' (expected AD, AB, BC or CD)");
}

} // namespace heatpinn
