#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hstl/models.hpp"
#include "hstl/nn/adam.hpp"
#include "hstl/nn/engine.hpp"
#include "oracles.hpp"

using namespace hstl;
using namespace hstl::nn;

namespace {

Tensor<double> random_input(const ModelSpec& model, std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> shape{n};
    shape.insert(shape.end(), model.input_shape.begin(), model.input_shape.end());
    Pcg32 rng(seed);
    return oracle::random_tensor(shape, rng);
}

std::vector<std::uint16_t> cyclic_labels(std::size_t n, std::size_t k) {
    std::vector<std::uint16_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::uint16_t>(i % k);
    return labels;
}

}  // namespace

TEST_CASE("a lone softmax layer equals softmax_cross_entropy's probs") {
    ModelSpec model;
    model.input_shape = {4};
    model.n_classes = 4;
    model.layers.push_back({Activation{Act::softmax}});
    Params<double> params = init_params<double>(model, 1);

    Pcg32 rng(8);
    const auto logits = oracle::random_tensor({3, 4}, rng, 2.0);
    Trace<double> trace = forward(model, params, logits, EngineMode{});
    CHECK(trace.output.data == softmax_rows(logits).data);
}

TEST_CASE("forward output is a probability distribution per sample") {
    ModelVariant mv{Variant::cnn, 5, 30, 7};
    const ModelSpec model = build_model(mv);
    Params<float> params = init_params<float>(model, 3);

    Pcg32 rng(12);
    Tensor<float> x({1, 1, 30, 5, 5});
    for (auto& v : x.data) v = static_cast<float>(rng.next_double() - 0.5);
    Trace<float> trace = forward(model, params, x, EngineMode{});
    REQUIRE(trace.output.shape == std::vector<std::size_t>{1, 7});
    float sum = 0;
    for (const float p : trace.output.data) sum += p;
    CHECK(sum == doctest::Approx(1.0f).epsilon(1e-5));
}

TEST_CASE("freeze flags do not change the forward pass") {
    ModelVariant mv{Variant::mlp2, 3, 4, 3};
    ModelSpec model = build_model(mv);
    Params<float> params = init_params<float>(model, 5);

    Tensor<float> x({2, 36});
    Pcg32 rng(6);
    for (auto& v : x.data) v = static_cast<float>(rng.next_double());

    Trace<float> before = forward(model, params, x, EngineMode{});
    for (auto& layer : model.layers) layer.trainable = false;
    model.layers.back().trainable = true;
    Trace<float> after = forward(model, params, x, EngineMode{});
    CHECK(before.output.data == after.output.data);
}

TEST_CASE("backward rejects inference traces and stale traces") {
    ModelVariant mv{Variant::mlp1, 1, 4, 2};
    const ModelSpec model = build_model(mv);
    Params<float> params = init_params<float>(model, 2);
    Tensor<float> x({2, 4}, {0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f, 0.7f, 0.8f});
    const std::vector<std::uint16_t> labels{0, 1};

    Trace<float> inference = forward(model, params, x, EngineMode{.training = false});
    CHECK_THROWS_AS(backward(model, params, inference, labels), ContractError);

    Trace<float> trace = forward(model, params, x, EngineMode{.training = true});
    Grads<float> grads = backward(model, params, trace, labels);
    AdamState<float> state = make_adam_state(model, params, {});
    adam_step(model, params, grads, state);
    CHECK_THROWS_AS(backward(model, params, trace, labels), ContractError);
}

TEST_CASE("saturated perfect predictions give ~zero gradients") {
    ModelSpec model;
    model.input_shape = {2};
    model.n_classes = 2;
    model.layers.push_back({Dense{2, 2}});
    model.layers.push_back({Activation{Act::softmax}});
    Params<double> params = init_params<double>(model, 1);
    params.layers[0].weight = Tensor<double>({2, 2}, {100.0, -100.0, -100.0, 100.0});
    params.layers[0].bias = Tensor<double>({2});

    Tensor<double> x({2, 2}, {10, 0, 0, 10});
    Trace<double> trace = forward(model, params, x, EngineMode{.training = true});
    Grads<double> grads = backward(model, params, trace, {0, 1});
    for (const double g : grads.layers[0].weight.data) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("dense-only model gradients match finite differences tightly") {
    ModelSpec model;
    model.input_shape = {5};
    model.n_classes = 3;
    model.layers.push_back({Dense{5, 4}});
    model.layers.push_back({Activation{Act::leaky_relu, 0.01}});
    model.layers.push_back({Dense{4, 3}});
    model.layers.push_back({Activation{Act::softmax}});
    Params<double> params = init_params<double>(model, 7);

    const auto x = random_input(model, 4, 10);
    CHECK(grad_check(model, params, x, cyclic_labels(4, 3)) < 1e-7);
}

TEST_CASE("each layer kind passes gradient checking below 1e-5") {
    SUBCASE("conv2d stack") {
        ModelSpec model;
        model.input_shape = {2, 3, 3};
        model.n_classes = 2;
        model.layers.push_back({Conv2D{2, 3}});
        model.layers.push_back({Activation{Act::relu}});
        model.layers.push_back({Flatten{}});
        model.layers.push_back({Dense{27, 2}});
        model.layers.push_back({Activation{Act::softmax}});
        Params<double> params = init_params<double>(model, 3);
        const auto x = random_input(model, 2, 21);
        CHECK(grad_check(model, params, x, cyclic_labels(2, 2)) < 1e-5);
    }
    SUBCASE("conv3d + reshape stack") {
        ModelSpec model;
        model.input_shape = {1, 4, 3, 3};
        model.n_classes = 2;
        model.layers.push_back({Conv3D{1, 2, 3}});
        model.layers.push_back({Activation{Act::leaky_relu, 0.01}});
        model.layers.push_back({Reshape3Dto2D{}});
        model.layers.push_back({Conv2D{4, 2}});
        model.layers.push_back({Activation{Act::relu}});
        model.layers.push_back({Flatten{}});
        model.layers.push_back({Dense{18, 2}});
        model.layers.push_back({Activation{Act::softmax}});
        Params<double> params = init_params<double>(model, 4);
        const auto x = random_input(model, 2, 22);
        CHECK(grad_check(model, params, x, cyclic_labels(2, 2)) < 1e-5);
    }
    SUBCASE("batchnorm stack") {
        ModelSpec model;
        model.input_shape = {6};
        model.n_classes = 3;
        model.layers.push_back({Dense{6, 5}});
        model.layers.push_back({BatchNorm{5}});
        model.layers.push_back({Activation{Act::relu}});
        model.layers.push_back({Dense{5, 3}});
        model.layers.push_back({Activation{Act::softmax}});
        Params<double> params = init_params<double>(model, 5);
        const auto x = random_input(model, 4, 23);
        CHECK(grad_check(model, params, x, cyclic_labels(4, 3)) < 1e-5);
    }
    SUBCASE("dropout layers are disabled inside the check") {
        ModelSpec model;
        model.input_shape = {4};
        model.n_classes = 2;
        model.layers.push_back({Dense{4, 4}});
        model.layers.push_back({Activation{Act::relu}});
        model.layers.push_back({Dropout{0.4}});
        model.layers.push_back({Dense{4, 2}});
        model.layers.push_back({Activation{Act::softmax}});
        Params<double> params = init_params<double>(model, 6);
        const auto x = random_input(model, 3, 24);
        CHECK(grad_check(model, params, x, cyclic_labels(3, 2)) < 1e-5);
    }
}

TEST_CASE("full cnn spec passes gradient checking on a 2-sample batch") {
    ModelVariant mv{Variant::cnn, 5, 30, 4};
    const ModelSpec model = build_model(mv);
    Params<double> params = init_params<double>(model, 11);
    const auto x = random_input(model, 2, 31);
    CHECK(grad_check(model, params, x, cyclic_labels(2, 4), 1e-5, 24) < 1e-5);
}

TEST_CASE("mlp2 spec passes gradient checking on a 2-sample batch") {
    ModelVariant mv{Variant::mlp2, 5, 6, 4};  // 150-wide input at desk scale
    const ModelSpec model = build_model(mv);
    Params<double> params = init_params<double>(model, 12);
    const auto x = random_input(model, 2, 32);
    CHECK(grad_check(model, params, x, cyclic_labels(2, 4), 1e-5, 60) < 1e-5);
}

TEST_CASE("frozen batchnorm uses running stats in training mode") {
    ModelSpec model;
    model.input_shape = {2};
    model.n_classes = 2;
    model.layers.push_back({BatchNorm{2}, false});  // frozen
    model.layers.push_back({Dense{2, 2}});
    model.layers.push_back({Activation{Act::softmax}});
    Params<double> params = init_params<double>(model, 1);
    params.layers[0].running_mean = Tensor<double>({2}, {1.0, -1.0});
    params.layers[0].running_var = Tensor<double>({2}, {4.0, 0.25});

    Tensor<double> x({2, 2}, {3.0, 0.0, -1.0, -2.0});
    Trace<double> train_mode = forward(model, params, x, EngineMode{.training = true});
    Trace<double> infer_mode = forward(model, params, x, EngineMode{.training = false});
    CHECK(train_mode.inputs[1].data == infer_mode.inputs[1].data);
    // (3-1)/sqrt(4+eps) ~ 1, (0 - -1)/sqrt(0.25+eps) ~ 2
    CHECK(train_mode.inputs[1].data[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(train_mode.inputs[1].data[1] == doctest::Approx(2.0).epsilon(1e-4));
    // Running stats untouched by the frozen layer.
    CHECK(params.layers[0].running_mean.data == std::vector<double>{1.0, -1.0});
}

TEST_CASE("grad_check with a frozen trunk only probes the head") {
    ModelSpec model;
    model.input_shape = {4};
    model.n_classes = 2;
    model.layers.push_back({Dense{4, 3}, false});
    model.layers.push_back({Activation{Act::relu}, false});
    model.layers.push_back({Dense{3, 2}});
    model.layers.push_back({Activation{Act::softmax}});
    Params<double> params = init_params<double>(model, 9);
    const auto x = random_input(model, 3, 33);
    CHECK(grad_check(model, params, x, cyclic_labels(3, 2)) < 1e-6);
}
