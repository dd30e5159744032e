#pragma once

#include "hstl/nn/params.hpp"

namespace hstl {

enum class Variant { cnn, mlp1, mlp2, mlp3 };

Variant variant_from_name(const std::string& name);
std::string variant_name(Variant v);

// Model geometry: MLP variants consume flat window^2 * components vectors,
// the CNN consumes [1, components, window, window] patch cubes.
struct ModelVariant {
    Variant kind = Variant::mlp2;
    std::size_t window = 5;
    std::size_t pca_components = 30;
    std::size_t n_classes = 0;
};

// Architectures:
//   cnn:  Conv3D 1->8 (kd 7), 8->16 (kd 5), 16->32 (kd 3), each + ReLU;
//         reshape to 2D; Conv2D ->64 + ReLU; flatten;
//         Dense 256 + LeakyReLU + Dropout .4; Dense 128 + LeakyReLU +
//         Dropout .4; Dense n_classes + softmax.
//   mlp1: Dense 10000 + ReLU; Dense 5000 + ReLU; Dense n_classes + softmax.
//   mlp2: Dense 472 + BN + ReLU; Dense 168 + BN + ReLU;
//         Dense n_classes + softmax.
//   mlp3: Dense 1024/512/256/128/72, each + BN + ReLU;
//         Dense n_classes + softmax.
nn::ModelSpec build_model(const ModelVariant& variant);

// Transfer-learning surgery: chop drop_last trailing entries off the layer
// list, freeze everything retained, append a freshly initialized head.
struct SurgerySpec {
    std::size_t drop_last = 0;
    std::vector<nn::LayerSpec> head;
    bool freeze_retained = true;
    std::uint64_t head_seed = 42;
};

// Spec-level surgery (no parameters); used for counting and validation.
nn::ModelSpec apply_surgery_spec(const nn::ModelSpec& model, const SurgerySpec& surgery);

// Full surgery: retained layers keep their trained tensors bit-for-bit and
// are frozen (when freeze_retained); head layers are initialized from
// head_seed. Junction shape mismatches raise SurgeryError.
template <typename T>
std::pair<nn::ModelSpec, nn::Params<T>> transfer_surgery(const nn::ModelSpec& model,
                                                         const nn::Params<T>& params,
                                                         const SurgerySpec& surgery);

// Stock per-variant surgeries targeting n_classes on the new scene.
// mlp heads carry no batch norm; the cnn keeps both conv stacks and gets
// Dense 256/128/64 + ReLU + Dropout .4 then Dense n_classes + softmax.
SurgerySpec default_surgery(Variant variant, const nn::ModelSpec& trained,
                            std::size_t n_classes, std::uint64_t head_seed);

template <typename T>
std::pair<nn::ModelSpec, nn::Params<T>> cnn_transfer_default(const nn::ModelSpec& model,
                                                             const nn::Params<T>& params,
                                                             std::size_t n_classes,
                                                             std::uint64_t head_seed);

}  // namespace hstl
