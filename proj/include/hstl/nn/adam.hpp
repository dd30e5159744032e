#pragma once

#include "hstl/nn/engine.hpp"

namespace hstl::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First/second moment estimates per trainable tensor plus the shared step
// counter.
template <typename T>
struct AdamState {
    AdamConfig hyper;
    std::vector<LayerParams<T>> m;
    std::vector<LayerParams<T>> v;
    std::uint64_t t = 0;
};

template <typename T>
AdamState<T> make_adam_state(const ModelSpec& model, const Params<T>& params, AdamConfig hyper);

// One Adam update over every trainable tensor with a gradient:
//   t += 1; m = b1*m + (1-b1)*g; v = b2*v + (1-b2)*g^2;
//   p -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
// Frozen tensors are untouched. Non-finite gradients raise NumericError
// naming the tensor. Bumps params.revision.
template <typename T>
void adam_step(const ModelSpec& model, Params<T>& params, const Grads<T>& grads,
               AdamState<T>& state);

}  // namespace hstl::nn
