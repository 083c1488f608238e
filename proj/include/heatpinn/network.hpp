#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "heatpinn/geometry.hpp"

namespace heatpinn {

/// Feed-forward topology: 3 inputs (x, y, t), tanh hidden layers, one linear output.
struct Architecture {
    static constexpr int input_dim = 3;
    static constexpr int output_dim = 1;

    int hidden_layers = 9;
    int hidden_width = 128;

    void validate() const;

    /// Number of weight matrices (hidden layers plus the output layer).
    int layer_count() const { return hidden_layers + 1; }

    int layer_rows(int k) const { return k == hidden_layers ? output_dim : hidden_width; }
    int layer_cols(int k) const { return k == 0 ? input_dim : hidden_width; }

    /// Total number of scalar parameters (weights and biases).
    int param_count() const;

    bool operator==(const Architecture&) const = default;
};

/// All weights and biases. weights[k] is (out x in); row i feeds neuron i.
struct NetworkParams {
    Architecture arch;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    void validate() const; ///< shapes chain from input to output, all entries finite
};

/// One-dimensional affine map m = scale * v + offset.
struct AffineMap {
    double scale = 1.0;
    double offset = 0.0;

    double apply(double v) const { return scale * v + offset; }
    double invert(double m) const { return (m - offset) / scale; }
};

/// Input maps take physical coordinates to the network's working range;
/// the output map takes the raw network output to temperature:
/// u = out.scale * uhat + out.offset.
struct Normalization {
    AffineMap x, y, t;
    AffineMap out;

    static Normalization identity() { return {}; }

    /// x, y mapped to [-1, 1] over the rectangle; t to [-1, 1] over [t0, t1].
    static Normalization for_window(const DomainSpec& d, double t0, double t1, double out_scale,
                                    double out_offset);

    void validate() const; ///< all scales nonzero
};

/// Glorot-uniform weights, zero biases. Bit-identical for a fixed seed.
NetworkParams init_network(const Architecture& arch, std::uint64_t seed);

/// Plain evaluation u = denorm(MLP(norm(p))).
double forward(const NetworkParams& net, const Normalization& norm, const SpaceTimePoint& p);

/// Batched evaluation; same math as forward() applied per point.
Eigen::VectorXd forward_batch(const NetworkParams& net, const Normalization& norm,
                              std::span<const SpaceTimePoint> pts);

/// Flattening order: layer-major; within a layer the weight matrix row-major,
/// then the bias vector. This is the on-disk payload order of snapshot files.
std::vector<double> flatten(const NetworkParams& net);
void unflatten(NetworkParams& net, std::span<const double> flat);

} // namespace heatpinn
