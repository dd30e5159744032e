#pragma once

#include "hstl/nn/ops.hpp"
#include "hstl/nn/params.hpp"

namespace hstl::nn {

// training controls dropout masking and whether trainable batch-norm
// layers draw batch statistics; frozen batch-norm always uses its stored
// running statistics.
struct EngineMode {
    bool training = false;
};

// Everything backward needs: per-layer inputs plus layer caches. inputs[i]
// feeds layer i; output holds the final class probabilities.
template <typename T>
struct Trace {
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    std::vector<Tensor<T>> dropout_masks;
    std::vector<BatchNormCache<T>> bn_caches;
    bool training = false;
    std::uint64_t params_revision = 0;
};

// Per-layer parameter gradients, slots mirroring LayerParams. Frozen
// layers keep empty slots.
template <typename T>
struct Grads {
    std::vector<LayerParams<T>> layers;
};

// Applies the layers in order. x is [batch, ...input_shape]. rng drives
// dropout masks and must be non-null when training with a positive rate.
template <typename T>
Trace<T> forward(const ModelSpec& model, Params<T>& params, const Tensor<T>& x,
                 EngineMode mode, Pcg32* rng = nullptr);

// Reverse-mode pass seeded by softmax_cross_entropy on the final logits.
// Requires a training-mode trace produced against the current params
// revision. Returns gradients for trainable layers only.
template <typename T>
Grads<T> backward(const ModelSpec& model, const Params<T>& params, const Trace<T>& trace,
                  const std::vector<std::uint16_t>& labels);

// Mean cross-entropy of a forward trace against labels.
template <typename T>
T trace_loss(const Trace<T>& trace, const ModelSpec& model,
             const std::vector<std::uint16_t>& labels);

// Central finite differences vs. backward over every trainable scalar
// (a seeded subsample of at most max_per_tensor scalars for larger
// tensors). Dropout layers are disabled for the check. Returns the max
// relative error |a - n| / max(|a|, |n|, 1e-8).
double grad_check(const ModelSpec& model, Params<double>& params, const Tensor<double>& x,
                  const std::vector<std::uint16_t>& labels, double step = 1e-5,
                  std::size_t max_per_tensor = 500, std::uint64_t subsample_seed = 1);

}  // namespace hstl::nn
