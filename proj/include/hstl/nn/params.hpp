#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "hstl/nn/layer_spec.hpp"
#include "hstl/tensor.hpp"

namespace hstl::nn {

// Named parameter tensors for one layer; unused slots stay empty.
// Dense/conv use weight+bias, batchnorm uses gamma/beta plus running stats.
template <typename T>
struct LayerParams {
    Tensor<T> weight, bias, gamma, beta, running_mean, running_var;
};

template <typename T>
struct Params {
    std::vector<LayerParams<T>> layers;
    // Bumped by every optimizer step; forward traces pin the revision they
    // saw so backward can reject a stale trace.
    std::uint64_t revision = 0;
};

// Tensor shapes per layer:
//   dense   weight [in, out], bias [out]
//   conv2d  weight [oc, ic, 3, 3], bias [oc]
//   conv3d  weight [oc, ic, kd, 3, 3], bias [oc]
//   batchnorm gamma/beta/running_mean/running_var [features]
//
// Weights are uniform(-a, a) drawn from PCG32(seed) layer by layer in spec
// order, entries row-major; a = sqrt(6/fan_in) for layers feeding a
// (leaky) ReLU and sqrt(6/(fan_in+fan_out)) for the layer feeding softmax.
// Biases 0, gamma 1, beta 0, running stats (0, 1).
template <typename T>
Params<T> init_params(const ModelSpec& model, std::uint64_t seed);

// Visits every present tensor in checkpoint order: layers ascending, slots
// in (weight, bias, gamma, beta, running_mean, running_var) order.
template <typename T>
void for_each_tensor(const ModelSpec& model, Params<T>& params,
                     const std::function<void(std::size_t layer, const std::string& name,
                                              Tensor<T>& tensor, bool trainable)>& fn);
template <typename T>
void for_each_tensor(const ModelSpec& model, const Params<T>& params,
                     const std::function<void(std::size_t layer, const std::string& name,
                                              const Tensor<T>& tensor, bool trainable)>& fn);

// Shape-checks params against the model spec (running_var >= 0 included).
template <typename T>
void validate_params(const ModelSpec& model, const Params<T>& params);

// The (slot name, shape) pairs a layer owns, in checkpoint order.
std::vector<std::pair<std::string, std::vector<std::size_t>>> layer_tensor_shapes(
    const LayerSpec& spec);

}  // namespace hstl::nn
