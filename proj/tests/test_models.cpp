#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hstl/models.hpp"
#include "hstl/nn/engine.hpp"

using namespace hstl;
using namespace hstl::nn;

namespace {

std::vector<std::size_t> dense_widths(const ModelSpec& model) {
    std::vector<std::size_t> widths;
    for (const auto& layer : model.layers)
        if (const auto* d = std::get_if<Dense>(&layer.spec)) {
            if (widths.empty()) widths.push_back(d->in);
            widths.push_back(d->out);
        }
    return widths;
}

}  // namespace

TEST_CASE("mlp1 at full geometry: (18750, 10000, 5000, 16)") {
    const ModelSpec model = build_model({Variant::mlp1, 25, 30, 16});
    CHECK(model.input_shape == std::vector<std::size_t>{18750});
    CHECK(dense_widths(model) == std::vector<std::size_t>{18750, 10000, 5000, 16});
}

TEST_CASE("mlp2 pre-transfer shape: (18750, 472, 168, 9)") {
    const ModelSpec model = build_model({Variant::mlp2, 25, 30, 9});
    CHECK(dense_widths(model) == std::vector<std::size_t>{18750, 472, 168, 9});
}

TEST_CASE("cnn at window 5 with 30 components flattens to 1600") {
    const ModelSpec model = build_model({Variant::cnn, 5, 30, 16});
    const auto shapes = infer_shapes(model);
    // After the conv stack: depth 30-6-4-2 = 18, reshape to 32*18 = 576 ch.
    bool saw_flatten = false;
    for (std::size_t i = 0; i < model.layers.size(); ++i)
        if (std::holds_alternative<Flatten>(model.layers[i].spec)) {
            CHECK(shapes[i] == std::vector<std::size_t>{64, 5, 5});
            CHECK(shapes[i + 1] == std::vector<std::size_t>{1600});
            saw_flatten = true;
        }
    CHECK(saw_flatten);
    CHECK(shapes[7] == std::vector<std::size_t>{576, 5, 5});  // post-reshape
}

TEST_CASE("cnn needs at least 13 spectral components") {
    CHECK_THROWS_AS(build_model({Variant::cnn, 5, 12, 4}), DimensionError);
    CHECK_NOTHROW(build_model({Variant::cnn, 5, 13, 4}));
}

TEST_CASE("table of trainable params after the three mlp surgeries") {
    // Base models trained on Indian Pines geometry (16 classes), heads
    // retargeted to the 9 Pavia classes.
    const auto count_after = [](Variant v) {
        const ModelSpec base = build_model({v, 25, 30, 16});
        const SurgerySpec surgery = default_surgery(v, base, 9, 1);
        const ModelSpec post = apply_surgery_spec(base, surgery);
        return count_params(post);
    };

    const ParamCounts mlp1 = count_after(Variant::mlp1);
    CHECK(mlp1.trainable == 50050009u);

    const ParamCounts mlp2 = count_after(Variant::mlp2);
    CHECK(mlp2.trainable == 12825u);

    const ParamCounts mlp3 = count_after(Variant::mlp3);
    CHECK(mlp3.trainable == 11921u);
}

TEST_CASE("mlp2 surgery yields the (18750,472,168,72,9) architecture") {
    const ModelSpec base = build_model({Variant::mlp2, 25, 30, 16});
    const ModelSpec post =
        apply_surgery_spec(base, default_surgery(Variant::mlp2, base, 9, 1));
    CHECK(dense_widths(post) == std::vector<std::size_t>{18750, 472, 168, 72, 9});
    CHECK(post.n_classes == 9);
}

TEST_CASE("mlp3 surgery yields the (18750,1024,512,256,128,72,32,9) architecture") {
    const ModelSpec base = build_model({Variant::mlp3, 25, 30, 16});
    const ModelSpec post =
        apply_surgery_spec(base, default_surgery(Variant::mlp3, base, 9, 1));
    CHECK(dense_widths(post) ==
          std::vector<std::size_t>{18750, 1024, 512, 256, 128, 72, 32, 9});
}

TEST_CASE("surgery retains trunk tensors bit-for-bit and freezes them") {
    const ModelSpec base = build_model({Variant::mlp2, 3, 5, 4});  // desk scale
    const Params<float> params = init_params<float>(base, 9);
    const SurgerySpec surgery = default_surgery(Variant::mlp2, base, 3, 55);
    const auto [post, post_params] = transfer_surgery(base, params, surgery);

    const std::size_t keep = base.layers.size() - surgery.drop_last;
    for (std::size_t i = 0; i < keep; ++i) {
        CHECK_FALSE(post.layers[i].trainable);
        CHECK(post_params.layers[i].weight.data == params.layers[i].weight.data);
        CHECK(post_params.layers[i].bias.data == params.layers[i].bias.data);
        CHECK(post_params.layers[i].gamma.data == params.layers[i].gamma.data);
        CHECK(post_params.layers[i].running_mean.data ==
              params.layers[i].running_mean.data);
    }
    // Trainable count equals the head alone.
    const auto counts = count_params(post);
    std::size_t head_params = 0;
    for (const auto& spec : surgery.head) head_params += layer_param_count(spec);
    CHECK(counts.trainable == head_params);
}

TEST_CASE("head init matches a standalone model drawn from the head seed") {
    const ModelSpec base = build_model({Variant::mlp2, 3, 5, 4});
    const Params<float> params = init_params<float>(base, 9);
    const SurgerySpec surgery = default_surgery(Variant::mlp2, base, 3, 123);
    const auto [post1, p1] = transfer_surgery(base, params, surgery);
    const auto [post2, p2] = transfer_surgery(base, params, surgery);
    const std::size_t keep = base.layers.size() - surgery.drop_last;
    for (std::size_t i = keep; i < post1.layers.size(); ++i) {
        CHECK(p1.layers[i].weight.data == p2.layers[i].weight.data);
        CHECK(p1.layers[i].bias.data == p2.layers[i].bias.data);
    }
}

TEST_CASE("cnn transfer keeps the conv stacks and adds 4 trainable layers") {
    const ModelSpec base = build_model({Variant::cnn, 5, 16, 5});  // desk scale
    const Params<float> params = init_params<float>(base, 13);
    const auto [post, post_params] = cnn_transfer_default(base, params, 9, 3);

    std::size_t conv_layers = 0, trainable_param_layers = 0;
    for (std::size_t i = 0; i < post.layers.size(); ++i) {
        const bool conv = std::holds_alternative<Conv2D>(post.layers[i].spec) ||
                          std::holds_alternative<Conv3D>(post.layers[i].spec);
        if (conv) {
            conv_layers++;
            CHECK_FALSE(post.layers[i].trainable);
            CHECK(post_params.layers[i].weight.data == params.layers[i].weight.data);
        }
        if (post.layers[i].trainable && layer_param_count(post.layers[i].spec) > 0)
            trainable_param_layers++;
    }
    CHECK(conv_layers == 4);
    CHECK(trainable_param_layers == 4);  // 3 fully connected + softmax classifier
    CHECK(post.n_classes == 9);

    // Forward on a target-geometry batch emits 9 probabilities per sample.
    Params<float> mutable_params = post_params;
    Tensor<float> x({2, 1, 16, 5, 5});
    for (std::size_t i = 0; i < x.size(); ++i)
        x.data[i] = static_cast<float>(i % 7) * 0.1f;
    const auto trace = forward(post, mutable_params, x, EngineMode{});
    CHECK(trace.output.shape == std::vector<std::size_t>{2, 9});
}

TEST_CASE("incompatible heads raise surgery errors that name the junction") {
    const ModelSpec base = build_model({Variant::mlp2, 3, 5, 4});
    SurgerySpec surgery;
    surgery.drop_last = 2;
    surgery.head = {Dense{10, 3}, Activation{Act::softmax}};  // junction is 168
    const Params<float> params = init_params<float>(base, 1);
    try {
        transfer_surgery(base, params, surgery);
        FAIL("expected SurgeryError");
    } catch (const SurgeryError& e) {
        CHECK(std::string(e.what()).find("168") != std::string::npos);
    }

    surgery.head = {Dense{168, 3}};  // no softmax tail
    CHECK_THROWS_AS(transfer_surgery(base, params, surgery), SurgeryError);

    surgery.drop_last = 99;
    surgery.head = {Dense{168, 3}, Activation{Act::softmax}};
    CHECK_THROWS_AS(transfer_surgery(base, params, surgery), SurgeryError);
}

TEST_CASE("rebuilds are deterministic for equal seeds") {
    const ModelSpec a = build_model({Variant::mlp3, 3, 6, 4});
    const ModelSpec b = build_model({Variant::mlp3, 3, 6, 4});
    const Params<float> pa = init_params<float>(a, 21);
    const Params<float> pb = init_params<float>(b, 21);
    for (std::size_t i = 0; i < pa.layers.size(); ++i)
        CHECK(pa.layers[i].weight.data == pb.layers[i].weight.data);
}

TEST_CASE("init scales follow the downstream activation") {
    const ModelSpec model = build_model({Variant::mlp2, 3, 5, 4});
    const Params<float> params = init_params<float>(model, 33);
    // Hidden dense layers feed (through BN) a ReLU: |w| < sqrt(6/fan_in).
    const auto* first = std::get_if<Dense>(&model.layers[0].spec);
    REQUIRE(first != nullptr);
    const double he = std::sqrt(6.0 / static_cast<double>(first->in));
    for (const float w : params.layers[0].weight.data) CHECK(std::abs(w) < he);
    // Biases start at zero.
    for (const float b : params.layers[0].bias.data) CHECK(b == 0.0f);
    // The classifier feeds softmax: glorot bound.
    const std::size_t last_dense = model.layers.size() - 2;
    const auto* cls = std::get_if<Dense>(&model.layers[last_dense].spec);
    REQUIRE(cls != nullptr);
    const double glorot = std::sqrt(6.0 / static_cast<double>(cls->in + cls->out));
    for (const float w : params.layers[last_dense].weight.data)
        CHECK(std::abs(w) < glorot);
}
