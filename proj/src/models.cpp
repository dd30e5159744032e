#include "hstl/models.hpp"

#include "hstl/errors.hpp"

namespace hstl {

using namespace nn;

Variant variant_from_name(const std::string& name) {
    if (name == "cnn") return Variant::cnn;
    if (name == "mlp1") return Variant::mlp1;
    if (name == "mlp2") return Variant::mlp2;
    if (name == "mlp3") return Variant::mlp3;
    throw ConfigError("unknown model variant: " + name);
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::cnn: return "cnn";
        case Variant::mlp1: return "mlp1";
        case Variant::mlp2: return "mlp2";
        default: return "mlp3";
    }
}

ModelSpec build_model(const ModelVariant& variant) {
    if (variant.window == 0 || variant.window % 2 == 0)
        throw ConfigError("model window must be odd, got " + std::to_string(variant.window));
    if (variant.n_classes < 2) throw ConfigError("model needs at least 2 classes");
    if (variant.pca_components == 0) throw ConfigError("model needs at least 1 component");

    ModelSpec model;
    model.n_classes = variant.n_classes;

    const auto dense_block = [&](std::size_t in, std::size_t out, bool bn) {
        model.layers.push_back({Dense{in, out}});
        if (bn) model.layers.push_back({BatchNorm{out}});
        model.layers.push_back({Activation{Act::relu}});
        return out;
    };

    if (variant.kind == Variant::cnn) {
        model.input_shape = {1, variant.pca_components, variant.window, variant.window};
        model.layers.push_back({Conv3D{1, 8, 7}});
        model.layers.push_back({Activation{Act::relu}});
        model.layers.push_back({Conv3D{8, 16, 5}});
        model.layers.push_back({Activation{Act::relu}});
        model.layers.push_back({Conv3D{16, 32, 3}});
        model.layers.push_back({Activation{Act::relu}});
        model.layers.push_back({Reshape3Dto2D{}});
        // Spectral size after the valid 7/5/3 stack.
        if (variant.pca_components < 13)
            throw DimensionError("cnn spectral stack needs at least 13 components, got " +
                                 std::to_string(variant.pca_components));
        const std::size_t depth = variant.pca_components - 12;
        model.layers.push_back({Conv2D{32 * depth, 64}});
        model.layers.push_back({Activation{Act::relu}});
        model.layers.push_back({Flatten{}});
        const std::size_t flat = 64 * variant.window * variant.window;
        model.layers.push_back({Dense{flat, 256}});
        model.layers.push_back({Activation{Act::leaky_relu}});
        model.layers.push_back({Dropout{0.4}});
        model.layers.push_back({Dense{256, 128}});
        model.layers.push_back({Activation{Act::leaky_relu}});
        model.layers.push_back({Dropout{0.4}});
        model.layers.push_back({Dense{128, variant.n_classes}});
        model.layers.push_back({Activation{Act::softmax}});
    } else {
        const std::size_t input = variant.window * variant.window * variant.pca_components;
        model.input_shape = {input};
        std::size_t width = input;
        switch (variant.kind) {
            case Variant::mlp1:
                width = dense_block(width, 10000, false);
                width = dense_block(width, 5000, false);
                break;
            case Variant::mlp2:
                width = dense_block(width, 472, true);
                width = dense_block(width, 168, true);
                break;
            default:
                for (const std::size_t w : {1024, 512, 256, 128, 72})
                    width = dense_block(width, w, true);
                break;
        }
        model.layers.push_back({Dense{width, variant.n_classes}});
        model.layers.push_back({Activation{Act::softmax}});
    }

    infer_shapes(model);
    return model;
}

namespace {

void check_surgery(const ModelSpec& model, const SurgerySpec& surgery) {
    if (surgery.drop_last >= model.layers.size())
        throw SurgeryError("drop_last " + std::to_string(surgery.drop_last) +
                           " would remove all " + std::to_string(model.layers.size()) +
                           " layers");
    if (surgery.head.empty()) throw SurgeryError("surgery head is empty");
    const auto* last = std::get_if<Activation>(&surgery.head.back());
    if (last == nullptr || last->kind != Act::softmax)
        throw SurgeryError("surgery head must end in a softmax activation");
}

}  // namespace

ModelSpec apply_surgery_spec(const ModelSpec& model, const SurgerySpec& surgery) {
    check_surgery(model, surgery);
    const std::size_t keep = model.layers.size() - surgery.drop_last;

    ModelSpec out;
    out.input_shape = model.input_shape;
    for (std::size_t i = 0; i < keep; ++i) {
        Layer layer = model.layers[i];
        if (surgery.freeze_retained) layer.trainable = false;
        out.layers.push_back(std::move(layer));
    }
    for (const auto& spec : surgery.head) out.layers.push_back({spec, true});

    // The junction and head must compose; report the junction shapes on
    // failure.
    std::vector<std::size_t> shape = model.input_shape;
    for (std::size_t i = 0; i < keep; ++i)
        shape = layer_output_shape(out.layers[i].spec, shape);
    const std::vector<std::size_t> junction = shape;
    try {
        for (std::size_t i = keep; i < out.layers.size(); ++i)
            shape = layer_output_shape(out.layers[i].spec, shape);
    } catch (const DimensionError& e) {
        throw SurgeryError("head does not fit the retained trunk (junction " +
                           shape_str(junction) + "): " + e.what());
    }
    if (shape.size() != 1)
        throw SurgeryError("surgery head must end with a flat class distribution");
    out.n_classes = shape[0];
    infer_shapes(out);
    return out;
}

template <typename T>
std::pair<ModelSpec, Params<T>> transfer_surgery(const ModelSpec& model, const Params<T>& params,
                                                 const SurgerySpec& surgery) {
    validate_params(model, params);
    ModelSpec out = apply_surgery_spec(model, surgery);
    const std::size_t keep = model.layers.size() - surgery.drop_last;

    // Head params come from a standalone spec so init draws exactly what a
    // fresh model of the head would draw.
    ModelSpec head_spec;
    head_spec.input_shape = infer_shapes(out)[keep];
    for (std::size_t i = keep; i < out.layers.size(); ++i)
        head_spec.layers.push_back(out.layers[i]);
    head_spec.n_classes = out.n_classes;
    Params<T> head_params = init_params<T>(head_spec, surgery.head_seed);

    Params<T> out_params;
    out_params.layers.resize(out.layers.size());
    for (std::size_t i = 0; i < keep; ++i) out_params.layers[i] = params.layers[i];
    for (std::size_t i = keep; i < out.layers.size(); ++i)
        out_params.layers[i] = std::move(head_params.layers[i - keep]);

    validate_params(out, out_params);
    return {std::move(out), std::move(out_params)};
}

SurgerySpec default_surgery(Variant variant, const ModelSpec& trained, std::size_t n_classes,
                            std::uint64_t head_seed) {
    if (n_classes < 2) throw SurgeryError("surgery head needs at least 2 classes");
    SurgerySpec surgery;
    surgery.head_seed = head_seed;

    std::size_t drop = 0;
    switch (variant) {
        case Variant::mlp1: drop = 4; break;  // Dense+ReLU+Dense+softmax
        case Variant::mlp2: drop = 2; break;  // Dense+softmax
        case Variant::mlp3: drop = 5; break;  // Dense+BN+ReLU+Dense+softmax
        case Variant::cnn: drop = 8; break;   // both dense blocks + classifier
    }
    if (drop >= trained.layers.size())
        throw SurgeryError("trained model too shallow for the " + variant_name(variant) +
                           " surgery");
    surgery.drop_last = drop;

    const auto shapes = infer_shapes(trained);
    const auto junction = shapes[trained.layers.size() - drop];
    if (junction.size() != 1)
        throw SurgeryError("expected a flat junction for the " + variant_name(variant) +
                           " surgery, got " + shape_str(junction));
    const std::size_t width = junction[0];

    switch (variant) {
        case Variant::mlp1:
            surgery.head = {Dense{width, 5000}, Activation{Act::relu}, Dense{5000, n_classes},
                            Activation{Act::softmax}};
            break;
        case Variant::mlp2:
            surgery.head = {Dense{width, 72}, Activation{Act::relu}, Dense{72, n_classes},
                            Activation{Act::softmax}};
            break;
        case Variant::mlp3:
            surgery.head = {Dense{width, 72},  Activation{Act::relu},
                            Dense{72, 32},     Activation{Act::relu},
                            Dense{32, n_classes}, Activation{Act::softmax}};
            break;
        case Variant::cnn:
            surgery.head = {Dense{width, 256},     Activation{Act::relu}, Dropout{0.4},
                            Dense{256, 128},       Activation{Act::relu}, Dropout{0.4},
                            Dense{128, 64},        Activation{Act::relu}, Dropout{0.4},
                            Dense{64, n_classes},  Activation{Act::softmax}};
            break;
    }
    return surgery;
}

template <typename T>
std::pair<ModelSpec, Params<T>> cnn_transfer_default(const ModelSpec& model,
                                                     const Params<T>& params,
                                                     std::size_t n_classes,
                                                     std::uint64_t head_seed) {
    return transfer_surgery(model, params,
                            default_surgery(Variant::cnn, model, n_classes, head_seed));
}

template std::pair<ModelSpec, Params<float>> transfer_surgery<float>(const ModelSpec&,
                                                                     const Params<float>&,
                                                                     const SurgerySpec&);
template std::pair<ModelSpec, Params<double>> transfer_surgery<double>(const ModelSpec&,
                                                                       const Params<double>&,
                                                                       const SurgerySpec&);
template std::pair<ModelSpec, Params<float>> cnn_transfer_default<float>(const ModelSpec&,
                                                                         const Params<float>&,
                                                                         std::size_t,
                                                                         std::uint64_t);
template std::pair<ModelSpec, Params<double>> cnn_transfer_default<double>(const ModelSpec&,
                                                                           const Params<double>&,
                                                                           std::size_t,
                                                                           std::uint64_t);

}  // namespace hstl
