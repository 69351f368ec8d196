#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "isal/engine.hpp"
#include "isal/errors.hpp"
#include "isal/model_io.hpp"
#include "oracles.hpp"

using namespace isal;

namespace {

NetworkModel single_conv_model(Tensor kernel, Tensor bias, std::size_t in_ch, std::size_t side,
                               std::size_t class_count) {
    // conv -> flatten -> identity-ish linear so the chain ends in logits
    NetworkModel m;
    m.input_shape = {in_ch, side, side};
    m.class_count = class_count;
    const std::size_t out_ch = kernel.extent(0);
    m.layers.push_back({LayerKind::conv2d, "conv1", std::move(kernel), std::move(bias)});
    m.layers.push_back({LayerKind::flatten, "flatten", {}, {}});
    LayerSpec fc{LayerKind::linear, "fc", Tensor({class_count, out_ch * side * side}), Tensor({class_count})};
    for (std::size_t o = 0; o < class_count; ++o) fc.weights(o, o % (out_ch * side * side)) = 1.0;
    m.layers.push_back(std::move(fc));
    validate_model(m);
    return m;
}

}  // namespace

TEST_CASE("1x1 identity conv passes the input through") {
    Tensor kernel({1, 1, 1, 1});
    kernel[0] = 1.0;
    NetworkModel m = single_conv_model(std::move(kernel), Tensor({1}), 1, 4, 2);
    Rng rng(7);
    const Tensor input = oracle::random_tensor(rng, {1, 4, 4}, -2.0, 2.0);
    const ActivationTrace trace = forward(m, input);
    CHECK(trace.output_of("conv1") == input);
}

TEST_CASE("relu forward clamps negatives") {
    NetworkModel m;
    m.input_shape = {4};
    m.class_count = 4;
    m.layers.push_back({LayerKind::relu, "relu1", {}, {}});
    LayerSpec fc{LayerKind::linear, "fc", Tensor({4, 4}), Tensor({4})};
    for (std::size_t i = 0; i < 4; ++i) fc.weights(i, i) = 1.0;
    m.layers.push_back(std::move(fc));
    const Tensor input({4}, {-1.0, 2.0, 0.0, 3.0});
    const ActivationTrace trace = forward(m, input);
    CHECK(trace.output_of("relu1") == Tensor({4}, {0.0, 2.0, 0.0, 3.0}));
}

TEST_CASE("forward matches the scalar-loop oracle") {
    for (std::uint64_t seed : {11u, 22u, 33u, 44u, 55u}) {
        Rng rng(seed);
        const NetworkModel m = oracle::random_conv_model(rng);
        const Tensor input = oracle::random_tensor(rng, m.input_shape, -1.0, 1.0);
        const ActivationTrace trace = forward(m, input);
        const auto expected = oracle::forward_all(m, input);
        REQUIRE(trace.outputs.size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            REQUIRE(trace.outputs[i].shape() == expected[i].shape());
            for (std::size_t j = 0; j < expected[i].size(); ++j) {
                CHECK(std::abs(trace.outputs[i][j] - expected[i][j]) <= 1e-12);
            }
        }
    }
}

TEST_CASE("forward validates shapes") {
    const NetworkModel m = build_toy_cnn(4, 1);
    CHECK_THROWS_AS(forward(m, Tensor({3, 32, 32})), ShapeMismatch);

    NetworkModel broken = m;
    broken.layers[0].weights = Tensor({8, 5, 3, 3});  // wrong input channels
    CHECK_THROWS_AS(forward(broken, Tensor({3, 64, 64})), InvalidModel);
}

TEST_CASE("cross entropy on symmetric two-class logits") {
    const auto r = cross_entropy(Tensor({2}, {0.0, 0.0}), 0);
    CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(r.grad_logits[0] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(r.grad_logits[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cross entropy of a singleton is exactly zero") {
    const auto r = cross_entropy(Tensor({1}, {3.7}), 0);
    CHECK(r.loss == 0.0);
    CHECK(r.grad_logits[0] == 0.0);
}

TEST_CASE("cross entropy gradient matches finite differences") {
    Tensor logits({3}, {2.0, -1.0, 0.5});
    const auto analytic = cross_entropy(logits, 1);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double fd = oracle::central_diff([&] { return oracle::cross_entropy_loss(logits, 1); }, logits[i]);
        CHECK(oracle::rel_err(fd, analytic.grad_logits[i]) < 1e-6);
    }
    CHECK(oracle::rel_err(analytic.loss, oracle::cross_entropy_loss(logits, 1)) < 1e-12);
}

TEST_CASE("cross entropy rejects a bad class index") {
    CHECK_THROWS_AS(cross_entropy(Tensor({3}), 3), IndexOutOfRange);
}

TEST_CASE("backward to the final layer returns grad_logits unchanged") {
    Rng rng(5);
    const NetworkModel m = oracle::random_conv_model(rng);
    const Tensor input = oracle::random_tensor(rng, m.input_shape, -1.0, 1.0);
    const ActivationTrace trace = forward(m, input);
    const Tensor g = oracle::random_tensor(rng, {m.class_count}, -1.0, 1.0);
    CHECK(backward_to_layer(m, trace, g, m.layers.back().name) == g);
}

TEST_CASE("backward of a zero gradient is zero") {
    const NetworkModel m = build_toy_cnn(3, 9);
    Rng rng(6);
    const Tensor input = oracle::random_tensor(rng, m.input_shape, 0.0, 1.0);
    const ActivationTrace trace = forward(m, input);
    const Tensor g = backward_to_layer(m, trace, Tensor({3}), "conv1");
    for (double v : g.flat()) CHECK(v == 0.0);
}

TEST_CASE("backward is linear in grad_logits") {
    Rng rng(8);
    const NetworkModel m = oracle::random_conv_model(rng);
    const Tensor input = oracle::random_tensor(rng, m.input_shape, -1.0, 1.0);
    const ActivationTrace trace = forward(m, input);
    const Tensor g = oracle::random_tensor(rng, {m.class_count}, -1.0, 1.0);
    Tensor g3 = g;
    for (double& v : g3.flat()) v *= 3.0;
    const Tensor b1 = backward_to_layer(m, trace, g, "conv1");
    const Tensor b3 = backward_to_layer(m, trace, g3, "conv1");
    for (std::size_t i = 0; i < b1.size(); ++i) {
        CHECK(std::abs(b3[i] - 3.0 * b1[i]) <= 1e-12 * std::max(1.0, std::abs(b3[i])));
    }
}

TEST_CASE("tap gradients match finite differences of the downstream loss") {
    for (std::uint64_t seed : {101u, 202u, 303u}) {
        Rng rng(seed);
        const NetworkModel m = oracle::random_conv_model(rng);
        const Tensor input = oracle::random_tensor(rng, m.input_shape, -1.0, 1.0);
        const ActivationTrace trace = forward(m, input);
        const std::size_t cls = seed % m.class_count;
        const auto ce = cross_entropy(trace.logits(), cls);

        for (const auto& conv : m.conv_layer_names()) {
            const std::size_t resolved = resolve_tap(m, conv, TapMode::post_relu);
            const Tensor analytic = backward_to_layer(m, trace, ce.grad_logits, conv);
            Tensor act = trace.outputs[resolved];
            REQUIRE(analytic.shape() == act.shape());
            for (std::size_t i = 0; i < act.size(); ++i) {
                const double fd = oracle::central_diff(
                    [&] {
                        const Tensor logits = oracle::forward_from(m, resolved, act);
                        return oracle::cross_entropy_loss(logits, cls);
                    },
                    act[i]);
                CHECK(oracle::rel_err(fd, analytic[i]) < 1e-4);
            }
        }
    }
}

TEST_CASE("pre-relu tap differentiates the conv output itself") {
    Rng rng(31);
    const NetworkModel m = build_toy_cnn(3, 12);
    const Tensor input = oracle::random_tensor(rng, m.input_shape, 0.0, 1.0);
    const ActivationTrace trace = forward(m, input);
    const auto ce = cross_entropy(trace.logits(), 1);

    const Tensor post = backward_to_layer(m, trace, ce.grad_logits, "conv2", TapMode::post_relu);
    const Tensor pre = backward_to_layer(m, trace, ce.grad_logits, "conv2", TapMode::pre_relu);
    CHECK(post.shape() == pre.shape());
    // the pre-relu gradient is the post-relu gradient masked by the relu
    const Tensor& conv_out = trace.output_of("conv2");
    for (std::size_t i = 0; i < pre.size(); ++i) {
        const double expected = conv_out[i] > 0.0 ? post[i] : 0.0;
        CHECK(std::abs(pre[i] - expected) <= 1e-12);
    }
}

TEST_CASE("parameter gradients match finite differences") {
    for (std::uint64_t seed : {71u, 72u, 73u}) {
        Rng rng(seed);
        NetworkModel m = oracle::random_conv_model(rng);
        const Tensor input = oracle::random_tensor(rng, m.input_shape, -1.0, 1.0);
        const std::size_t cls = seed % m.class_count;

        const ActivationTrace trace = forward(m, input);
        const auto ce = cross_entropy(trace.logits(), cls);
        const ParamGrads grads = backward_params(m, trace, ce.grad_logits);

        auto loss_now = [&] {
            const ActivationTrace t = forward(m, input);
            return cross_entropy(t.logits(), cls).loss;
        };
        for (std::size_t l = 0; l < m.layers.size(); ++l) {
            if (!m.layers[l].has_params()) continue;
            // probe a deterministic sample of weights plus every bias
            for (std::size_t i = 0; i < m.layers[l].weights.size(); i += 1 + m.layers[l].weights.size() / 7) {
                const double fd = oracle::central_diff(loss_now, m.layers[l].weights[i]);
                CHECK(oracle::rel_err(fd, grads.weights[l][i]) < 1e-4);
            }
            for (std::size_t i = 0; i < m.layers[l].bias.size(); ++i) {
                const double fd = oracle::central_diff(loss_now, m.layers[l].bias[i]);
                CHECK(oracle::rel_err(fd, grads.bias[l][i]) < 1e-4);
            }
        }
    }
}

TEST_CASE("input gradients match finite differences") {
    for (std::uint64_t seed : {81u, 82u, 83u}) {
        Rng rng(seed);
        const NetworkModel m = oracle::random_conv_model(rng);
        Tensor input = oracle::random_tensor(rng, m.input_shape, -1.0, 1.0);
        const std::size_t cls = (seed + 1) % m.class_count;

        const ActivationTrace trace = forward(m, input);
        const auto ce = cross_entropy(trace.logits(), cls);
        const Tensor analytic = backward_to_input(m, trace, ce.grad_logits);

        for (std::size_t i = 0; i < input.size(); i += 1 + input.size() / 11) {
            const double fd = oracle::central_diff(
                [&] {
                    const ActivationTrace t = forward(m, input);
                    return cross_entropy(t.logits(), cls).loss;
                },
                input[i]);
            CHECK(oracle::rel_err(fd, analytic[i]) < 1e-4);
        }
    }
}

TEST_CASE("conv forward and input gradient equal the 6-loop reference") {
    Rng rng(400);
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t oc = 1 + rng.index(4), ic = 1 + rng.index(4);
        const std::size_t side = 2 + rng.index(7);  // up to 8x8
        const std::size_t k = rng.index(2) == 0 ? 1 : 3;
        LayerSpec conv{LayerKind::conv2d, "c", oracle::random_tensor(rng, {oc, ic, k, k}, -1.0, 1.0),
                       oracle::random_tensor(rng, {oc}, -0.5, 0.5)};
        NetworkModel m;
        m.input_shape = {ic, side, side};
        m.class_count = oc * side * side;
        m.layers.push_back(conv);
        m.layers.push_back({LayerKind::flatten, "flatten", {}, {}});
        LayerSpec fc{LayerKind::linear, "fc", Tensor({m.class_count, m.class_count}), Tensor({m.class_count})};
        for (std::size_t i = 0; i < m.class_count; ++i) fc.weights(i, i) = 1.0;
        m.layers.push_back(std::move(fc));

        const Tensor input = oracle::random_tensor(rng, m.input_shape, -1.0, 1.0);
        const ActivationTrace trace = forward(m, input);
        const Tensor expected = oracle::conv2d_6loop(input, conv.weights, conv.bias);
        for (std::size_t i = 0; i < expected.size(); ++i) {
            CHECK(std::abs(trace.output_of("c")[i] - expected[i]) <= 1e-12);
        }

        const Tensor gout = oracle::random_tensor(rng, expected.shape(), -1.0, 1.0);
        const Tensor gin = backward_to_input(m, trace, gout.reshaped({gout.size()}));
        const Tensor gin_expected = oracle::conv2d_6loop_input_grad(gout, conv.weights, ic, side, side);
        for (std::size_t i = 0; i < gin.size(); ++i) {
            CHECK(std::abs(gin[i] - gin_expected[i]) <= 1e-12);
        }
    }
}

TEST_CASE("guided backward equals plain backward when there is no relu") {
    NetworkModel m;
    m.input_shape = {1, 2, 2};
    m.class_count = 2;
    m.layers.push_back({LayerKind::flatten, "flatten", {}, {}});
    LayerSpec fc{LayerKind::linear, "fc", Tensor({2, 4}, {0.5, -1.0, 2.0, 0.25, -0.5, 1.0, -2.0, 0.75}), Tensor({2})};
    m.layers.push_back(std::move(fc));

    const Tensor input({1, 2, 2}, {1.0, -2.0, 3.0, -4.0});
    const ActivationTrace trace = forward(m, input);
    const Tensor g({2}, {1.0, -0.5});
    CHECK(guided_backward_to_input(m, trace, g) == backward_to_input(m, trace, g));
}

TEST_CASE("guided rule masks by forward sign and gradient sign") {
    // relu -> flatten -> linear; incoming gradient at relu is the picked row of W
    NetworkModel m;
    m.input_shape = {1, 2, 2};
    m.class_count = 2;
    m.layers.push_back({LayerKind::relu, "relu1", {}, {}});
    m.layers.push_back({LayerKind::flatten, "flatten", {}, {}});
    LayerSpec fc{LayerKind::linear, "fc", Tensor({2, 4}, {1.0, -2.0, 3.0, -4.0, 0.5, 0.5, 0.5, 0.5}), Tensor({2})};
    m.layers.push_back(std::move(fc));

    const Tensor input({1, 2, 2}, {2.0, 5.0, -1.0, 4.0});
    const ActivationTrace trace = forward(m, input);
    const Tensor g({2}, {1.0, 0.0});  // class 0 logit

    // gradient into relu = W row 0 = [1, -2, 3, -4];
    // pass where input > 0 and gradient > 0: positions 0 and 2, but input[2] <= 0
    const Tensor guided = guided_backward_to_input(m, trace, g);
    CHECK(guided == Tensor({1, 2, 2}, {1.0, 0.0, 0.0, 0.0}));

    // plain backward only masks by forward sign
    const Tensor plain = backward_to_input(m, trace, g);
    CHECK(plain == Tensor({1, 2, 2}, {1.0, -2.0, 0.0, -4.0}));
}

TEST_CASE("forward and backward are bitwise repeatable") {
    Rng rng(900);
    const NetworkModel m = oracle::random_conv_model(rng);
    const Tensor input = oracle::random_tensor(rng, m.input_shape, -1.0, 1.0);
    const ActivationTrace t1 = forward(m, input);
    const ActivationTrace t2 = forward(m, input);
    REQUIRE(t1.outputs.size() == t2.outputs.size());
    for (std::size_t i = 0; i < t1.outputs.size(); ++i) CHECK(t1.outputs[i] == t2.outputs[i]);

    const auto ce = cross_entropy(t1.logits(), 0);
    CHECK(backward_to_layer(m, t1, ce.grad_logits, "conv1") == backward_to_layer(m, t2, ce.grad_logits, "conv1"));
}

TEST_CASE("unknown taps and mismatched traces are rejected") {
    const NetworkModel m = build_toy_cnn(2, 3);
    Rng rng(10);
    const Tensor input = oracle::random_tensor(rng, m.input_shape, 0.0, 1.0);
    const ActivationTrace trace = forward(m, input);
    const auto ce = cross_entropy(trace.logits(), 0);

    CHECK_THROWS_AS(backward_to_layer(m, trace, ce.grad_logits, "conv9"), UnknownLayer);

    const NetworkModel other = build_toy_cnn(3, 3);
    CHECK_THROWS_AS(backward_to_layer(other, trace, ce.grad_logits, "conv1"), TraceMismatch);

    CHECK_THROWS_AS(backward_to_layer(m, trace, Tensor({5}), "conv1"), ShapeMismatch);
}
