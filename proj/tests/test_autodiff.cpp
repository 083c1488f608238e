#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <heatpinn/autodiff.hpp>
#include <heatpinn/common.hpp>
#include <heatpinn/geometry.hpp>
#include <heatpinn/network.hpp>

#include <cmath>
#include <cstring>
#include <vector>

#include "oracles.hpp"

using namespace heatpinn;
using testing::fd_bundle;
using testing::fd_param_gradient;
using testing::max_grad_rel_err;
using testing::rel_err;

namespace {

NetworkParams make_random_net(const Architecture& arch, std::uint64_t seed) {
    NetworkParams net = init_network(arch, seed);
    Rng rng(seed_stream(seed, 0x74657374));
    for (std::size_t k = 0; k < net.weights.size(); ++k) {
        for (Eigen::Index i = 0; i < net.weights[k].rows(); ++i)
            for (Eigen::Index j = 0; j < net.weights[k].cols(); ++j)
                net.weights[k](i, j) += rng.uniform(-0.3, 0.3);
        for (Eigen::Index i = 0; i < net.biases[k].size(); ++i)
            net.biases[k](i) = rng.uniform(-0.3, 0.3);
    }
    return net;
}

NetworkParams zero_net(const Architecture& arch) {
    NetworkParams net = init_network(arch, 0);
    for (auto& w : net.weights) w.setZero();
    for (auto& b : net.biases) b.setZero();
    return net;
}

/// Synthetic objective touching every bundle channel: sum of squared affine
/// combinations with per-point targets.
PointLossFn synthetic_loss() {
    return [](std::size_t i, const DerivBundle& b, BundleSeed& seed) {
        const double target = 0.1 * static_cast<double>(i);
        const double v = b.u + 2.0 * b.du_dt - 3.0 * b.du_dx + 0.5 * b.du_dy +
                         0.25 * b.d2u_dx2 - 0.75 * b.d2u_dy2 - target;
        seed.u = 2.0 * v;
        seed.du_dt = 4.0 * v;
        seed.du_dx = -6.0 * v;
        seed.du_dy = 1.0 * v;
        seed.d2u_dx2 = 0.5 * v;
        seed.d2u_dy2 = -1.5 * v;
        return v * v;
    };
}

std::vector<SpaceTimePoint> random_points(std::uint64_t seed, int n, const DomainSpec& d,
                                          double t0, double t1) {
    Rng rng(seed_stream(seed, 0x70747321));
    std::vector<SpaceTimePoint> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        pts.push_back({rng.uniform(0.05 * d.length, 0.95 * d.length),
                       rng.uniform(0.05 * d.width, 0.95 * d.width), rng.uniform(t0, t1)});
    return pts;
}

bool bundles_equal_bits(const DerivBundle& a, const DerivBundle& b) {
    return std::memcmp(&a, &b, sizeof(DerivBundle)) == 0;
}

} // namespace

TEST_CASE("zero network yields exactly zero bundle") {
    const Architecture arch{.hidden_layers = 3, .hidden_width = 8};
    const NetworkParams net = zero_net(arch);
    const DerivBundle b = eval_with_input_derivs(net, {1.7, -0.3, 4.2});
    CHECK(b.u == 0.0);
    CHECK(b.du_dt == 0.0);
    CHECK(b.du_dx == 0.0);
    CHECK(b.du_dy == 0.0);
    CHECK(b.d2u_dx2 == 0.0);
    CHECK(b.d2u_dy2 == 0.0);
}

TEST_CASE("constant network has zero derivatives and offset value") {
    const Architecture arch{.hidden_layers = 2, .hidden_width = 4};
    const NetworkParams net = zero_net(arch);
    Normalization norm = Normalization::identity();
    norm.out = {500.0, 298.0};
    const DerivBundle b = eval_with_input_derivs(net, norm, {3.0, 2.0, 1.0});
    CHECK(b.u == 298.0);
    CHECK(b.du_dt == 0.0);
    CHECK(b.d2u_dx2 == 0.0);
    CHECK(b.d2u_dy2 == 0.0);
}

TEST_CASE("single neuron u = tanh(x) matches analytic derivatives") {
    const Architecture arch{.hidden_layers = 1, .hidden_width = 1};
    NetworkParams net = zero_net(arch);
    net.weights[0](0, 0) = 1.0; // x column
    net.weights[1](0, 0) = 1.0;

    SUBCASE("at the origin") {
        const DerivBundle b = eval_with_input_derivs(net, {0.0, 0.7, -1.3});
        CHECK(b.u == 0.0);
        CHECK(b.du_dx == 1.0);
        CHECK(b.d2u_dx2 == 0.0);
        CHECK(b.du_dy == 0.0);
        CHECK(b.du_dt == 0.0);
    }

    SUBCASE("away from the origin") {
        const double x = 0.3;
        const DerivBundle b = eval_with_input_derivs(net, {x, 0.0, 0.0});
        const double th = std::tanh(x);
        const double s = 1.0 - th * th;
        CHECK(b.u == doctest::Approx(th).epsilon(1e-15));
        CHECK(b.du_dx == doctest::Approx(s).epsilon(1e-15));
        CHECK(b.d2u_dx2 == doctest::Approx(-2.0 * th * s).epsilon(1e-14));
        CHECK(b.d2u_dy2 == 0.0);
    }
}

TEST_CASE("normalization chain rule matches analytic composition") {
    // u = S * tanh(a*x + c) + O through the affine input/output maps.
    const Architecture arch{.hidden_layers = 1, .hidden_width = 1};
    NetworkParams net = zero_net(arch);
    net.weights[0](0, 0) = 1.0;
    net.weights[1](0, 0) = 1.0;

    Normalization norm = Normalization::identity();
    norm.x = {0.25, -0.5};
    norm.out = {120.0, 298.0};

    const double x = 3.2;
    const double z = 0.25 * x - 0.5;
    const double th = std::tanh(z);
    const double s = 1.0 - th * th;

    const DerivBundle b = eval_with_input_derivs(net, norm, {x, 1.0, 2.0});
    CHECK(b.u == doctest::Approx(120.0 * th + 298.0).epsilon(1e-15));
    CHECK(b.du_dx == doctest::Approx(120.0 * 0.25 * s).epsilon(1e-14));
    CHECK(b.d2u_dx2 == doctest::Approx(120.0 * 0.0625 * (-2.0 * th * s)).epsilon(1e-13));
    CHECK(b.du_dt == 0.0);
    CHECK(b.du_dy == 0.0);
    CHECK(b.u == forward(net, norm, {x, 1.0, 2.0}));
}

TEST_CASE("bundles match central finite differences over random networks") {
    const DomainSpec d;
    Rng arch_rng(seed_stream(11, 0x61726368));
    int checked = 0;
    for (int trial = 0; trial < 24; ++trial) {
        const Architecture arch{.hidden_layers = 1 + static_cast<int>(arch_rng.bits() % 4),
                                .hidden_width = 1 + static_cast<int>(arch_rng.bits() % 16)};
        const NetworkParams net = make_random_net(arch, 100 + static_cast<std::uint64_t>(trial));

        // Alternate between raw and physically scaled evaluation.
        const bool scaled = trial % 2 == 0;
        const Normalization norm =
            scaled ? Normalization::for_window(d, 0.0, 8.0, 500.0, 298.0)
                   : Normalization::identity();
        const double floor1 = 1e-6 * std::max(1.0, std::abs(norm.out.scale));
        const double floor2 = 1e-4 * std::max(1.0, std::abs(norm.out.scale));

        for (const SpaceTimePoint& p :
             random_points(200 + static_cast<std::uint64_t>(trial), 4, d, 0.5, 7.5)) {
            const DerivBundle b = eval_with_input_derivs(net, norm, p);
            const testing::FdBundle fd = fd_bundle(net, norm, p);
            CHECK(rel_err(fd.u, b.u, 1.0) < 1e-12);
            CHECK(rel_err(fd.du_dx, b.du_dx, floor1) < 1e-5);
            CHECK(rel_err(fd.du_dy, b.du_dy, floor1) < 1e-5);
            CHECK(rel_err(fd.du_dt, b.du_dt, floor1) < 1e-5);
            CHECK(rel_err(fd.d2u_dx2, b.d2u_dx2, floor2) < 1e-3);
            CHECK(rel_err(fd.d2u_dy2, b.d2u_dy2, floor2) < 1e-3);
            ++checked;
        }
    }
    CHECK(checked == 96);
}

TEST_CASE("bundle combination is linear in externally summed networks") {
    const Architecture arch{.hidden_layers = 2, .hidden_width = 6};
    const NetworkParams n1 = make_random_net(arch, 5);
    const NetworkParams n2 = make_random_net(arch, 6);
    const Normalization norm = Normalization::identity();
    const SpaceTimePoint p{0.4, -0.2, 0.9};
    const double a = 1.75, c = -0.4;

    const DerivBundle b1 = eval_with_input_derivs(n1, norm, p);
    const DerivBundle b2 = eval_with_input_derivs(n2, norm, p);

    // Finite differences of the externally summed function a*u1 + c*u2.
    const double h = 1e-4;
    const auto combined = [&](double dx) {
        return a * forward(n1, norm, {p.x + dx, p.y, p.t}) +
               c * forward(n2, norm, {p.x + dx, p.y, p.t});
    };
    const double fd_first = (combined(h) - combined(-h)) / (2.0 * h);
    const double fd_second = (combined(h) - 2.0 * combined(0.0) + combined(-h)) / (h * h);
    CHECK(rel_err(fd_first, a * b1.du_dx + c * b2.du_dx, 1e-6) < 1e-5);
    CHECK(rel_err(fd_second, a * b1.d2u_dx2 + c * b2.d2u_dx2, 1e-4) < 1e-3);
}

TEST_CASE("eval_bundles gates channels by mode and keeps u bit-identical") {
    const Architecture arch{.hidden_layers = 3, .hidden_width = 12};
    const NetworkParams net = make_random_net(arch, 9);
    const DomainSpec d;
    const Normalization norm = Normalization::for_window(d, 0.0, 2.0, 500.0, 298.0);
    const auto pts = random_points(77, 10, d, 0.0, 2.0);

    std::vector<DerivBundle> value(pts.size()), first(pts.size()), full(pts.size());
    eval_bundles(net, norm, pts, DerivMode::value, value);
    eval_bundles(net, norm, pts, DerivMode::first, first);
    eval_bundles(net, norm, pts, DerivMode::full, full);

    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(value[i].u == full[i].u);
        CHECK(first[i].u == full[i].u);
        CHECK(value[i].du_dx == 0.0);
        CHECK(value[i].d2u_dx2 == 0.0);
        CHECK(first[i].du_dx == full[i].du_dx);
        CHECK(first[i].du_dy == full[i].du_dy);
        CHECK(first[i].du_dt == full[i].du_dt);
        CHECK(first[i].d2u_dx2 == 0.0);
        CHECK(first[i].d2u_dy2 == 0.0);
        // forward() evaluates a width-1 batch; a different GEMM kernel may
        // round differently in the last ulp, so this is not a bit comparison.
        CHECK(rel_err(forward(net, norm, pts[i]), full[i].u, 1.0) < 1e-13);
    }
}

TEST_CASE("evaluation is deterministic bit for bit") {
    const Architecture arch{.hidden_layers = 4, .hidden_width = 16};
    const NetworkParams net = make_random_net(arch, 21);
    const DomainSpec d;
    const Normalization norm = Normalization::for_window(d, 0.0, 8.0, 500.0, 298.0);
    const SpaceTimePoint p{7.7, 3.3, 5.5};
    const DerivBundle b1 = eval_with_input_derivs(net, norm, p);
    const DerivBundle b2 = eval_with_input_derivs(net, norm, p);
    CHECK(bundles_equal_bits(b1, b2));
}

TEST_CASE("loss_gradient matches per-parameter finite differences") {
    const Architecture arch{.hidden_layers = 2, .hidden_width = 8};
    const NetworkParams net = make_random_net(arch, 31);
    const DomainSpec d;
    const Normalization norm = Normalization::for_window(d, 0.0, 4.0, 2.0, 0.5);
    const auto pts = random_points(32, 16, d, 0.0, 4.0);
    const PointLossFn fn = synthetic_loss();

    const LossGradResult res = loss_gradient(net, norm, pts, DerivMode::full, fn);
    CHECK(res.value == loss_value(net, norm, pts, DerivMode::full, fn));
    CHECK(res.grad.all_finite());

    const ParamGradient fd = fd_param_gradient(net, [&](const NetworkParams& n) {
        return loss_value(n, norm, pts, DerivMode::full, fn);
    });
    CHECK(max_grad_rel_err(fd, res.grad) < 1e-6);
}

TEST_CASE("loss_gradient trivial cases") {
    const Architecture arch{.hidden_layers = 2, .hidden_width = 4};
    const DomainSpec d;
    const Normalization norm = Normalization::identity();
    const std::vector<SpaceTimePoint> pts = random_points(1, 4, d, 0.0, 1.0);

    SUBCASE("objective identically zero") {
        const NetworkParams net = make_random_net(arch, 77);
        const auto res = loss_gradient(net, norm, pts, DerivMode::full,
                                       [](std::size_t, const DerivBundle&, BundleSeed&) {
                                           return 0.0;
                                       });
        CHECK(res.value == 0.0);
        CHECK(res.grad.squared_norm() == 0.0);
    }

    SUBCASE("sum of squared outputs at a stationary point") {
        const NetworkParams net = zero_net(arch);
        const auto res = loss_gradient(net, norm, pts, DerivMode::value,
                                       [](std::size_t, const DerivBundle& b, BundleSeed& seed) {
                                           seed.u = 2.0 * b.u;
                                           return b.u * b.u;
                                       });
        CHECK(res.value == 0.0);
        CHECK(res.grad.squared_norm() == 0.0);
    }
}

TEST_CASE("loss_gradient_accumulate scales and adds") {
    const Architecture arch{.hidden_layers = 2, .hidden_width = 6};
    const NetworkParams net = make_random_net(arch, 13);
    const DomainSpec d;
    const Normalization norm = Normalization::for_window(d, 0.0, 1.0, 1.0, 0.0);
    const auto pts = random_points(90, 12, d, 0.0, 1.0);
    const PointLossFn fn = synthetic_loss();

    const LossGradResult base = loss_gradient(net, norm, pts, DerivMode::full, fn);

    ParamGradient acc = ParamGradient::zeros_like(net);
    const double v = loss_gradient_accumulate(net, norm, pts, DerivMode::full, fn, 2.0, acc);
    CHECK(v == base.value);
    for (std::size_t k = 0; k < acc.weights.size(); ++k) {
        CHECK((acc.weights[k] - 2.0 * base.grad.weights[k]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((acc.biases[k] - 2.0 * base.grad.biases[k]).cwiseAbs().maxCoeff() == 0.0);
    }

    // Accumulating again doubles the buffer (up to non-associative rounding
    // of the second += pass).
    loss_gradient_accumulate(net, norm, pts, DerivMode::full, fn, 2.0, acc);
    for (std::size_t k = 0; k < acc.weights.size(); ++k) {
        const double scale = std::max(1.0, base.grad.weights[k].cwiseAbs().maxCoeff());
        CHECK((acc.weights[k] - 4.0 * base.grad.weights[k]).cwiseAbs().maxCoeff() / scale <
              1e-12);
    }
}

TEST_CASE("repeated loss_gradient calls are bit-identical") {
    const Architecture arch{.hidden_layers = 3, .hidden_width = 10};
    const NetworkParams net = make_random_net(arch, 55);
    const DomainSpec d;
    const Normalization norm = Normalization::for_window(d, 0.0, 8.0, 500.0, 298.0);
    const auto pts = random_points(4, 300, d, 0.0, 8.0); // crosses a block boundary
    const PointLossFn fn = synthetic_loss();

    const LossGradResult r1 = loss_gradient(net, norm, pts, DerivMode::full, fn);
    const LossGradResult r2 = loss_gradient(net, norm, pts, DerivMode::full, fn);
    CHECK(r1.value == r2.value);
    for (std::size_t k = 0; k < r1.grad.weights.size(); ++k) {
        CHECK((r1.grad.weights[k] - r2.grad.weights[k]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((r1.grad.biases[k] - r2.grad.biases[k]).cwiseAbs().maxCoeff() == 0.0);
    }

    // Blocked evaluation agrees with a per-point reference sum.
    double direct = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const DerivBundle b = eval_with_input_derivs(net, norm, pts[i]);
        BundleSeed seed;
        direct += fn(i, b, seed);
    }
    CHECK(rel_err(r1.value, direct, 1e-12) < 1e-12);
}

TEST_CASE("error paths") {
    const Architecture arch{.hidden_layers = 1, .hidden_width = 4};
    const NetworkParams net = make_random_net(arch, 3);
    const Normalization norm = Normalization::identity();
    const PointLossFn fn = synthetic_loss();

    SUBCASE("empty batch") {
        const std::vector<SpaceTimePoint> empty;
        CHECK_THROWS_AS(loss_value(net, norm, empty, DerivMode::full, fn), Error);
        CHECK_THROWS_AS(loss_gradient(net, norm, empty, DerivMode::full, fn), Error);
    }

    SUBCASE("non-finite input point") {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(eval_with_input_derivs(net, {nan, 0.0, 0.0}), Error);
    }

    SUBCASE("output span size mismatch") {
        const std::vector<SpaceTimePoint> pts(3);
        std::vector<DerivBundle> out(2);
        CHECK_THROWS_AS(eval_bundles(net, norm, pts, DerivMode::full, out), Error);
    }

    SUBCASE("non-finite loss contribution names the point") {
        const std::vector<SpaceTimePoint> pts{{1.5, 2.5, 3.5}};
        try {
            loss_value(net, norm, pts, DerivMode::value,
                       [](std::size_t, const DerivBundle&, BundleSeed&) {
                           return std::numeric_limits<double>::quiet_NaN();
                       });
            FAIL("expected an error");
        } catch (const Error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("non-finite") != std::string::npos);
            CHECK(msg.find("1.5") != std::string::npos);
        }
    }

    SUBCASE("incongruent accumulation buffer") {
        const std::vector<SpaceTimePoint> pts(4, SpaceTimePoint{0.1, 0.2, 0.3});
        const Architecture other{.hidden_layers = 2, .hidden_width = 4};
        ParamGradient wrong = ParamGradient::zeros_like(make_random_net(other, 1));
        CHECK_THROWS_AS(
            loss_gradient_accumulate(net, norm, pts, DerivMode::full, fn, 1.0, wrong), Error);
    }
}

TEST_CASE("ParamGradient buffer arithmetic") {
    const Architecture arch{.hidden_layers = 2, .hidden_width = 3};
    const NetworkParams net = make_random_net(arch, 8);

    ParamGradient g = ParamGradient::zeros_like(net);
    CHECK(g.congruent_with(net));
    CHECK(g.squared_norm() == 0.0);
    CHECK(g.all_finite());

    ParamGradient h = ParamGradient::zeros_like(net);
    h.weights[0](0, 0) = 3.0;
    h.biases[1](1) = -4.0;
    g.add_scaled(h, 0.5);
    CHECK(g.weights[0](0, 0) == 1.5);
    CHECK(g.biases[1](1) == -2.0);
    CHECK(g.squared_norm() == doctest::Approx(1.5 * 1.5 + 4.0).epsilon(1e-15));

    g.set_zero();
    CHECK(g.squared_norm() == 0.0);

    const Architecture other{.hidden_layers = 3, .hidden_width = 3};
    CHECK_FALSE(g.congruent_with(make_random_net(other, 1)));
}
