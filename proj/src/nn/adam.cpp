#include "hstl/nn/adam.hpp"

#include <cmath>

#include "hstl/errors.hpp"
#include "hstl/threading.hpp"

namespace hstl::nn {

template <typename T>
AdamState<T> make_adam_state(const ModelSpec& model, const Params<T>& params, AdamConfig hyper) {
    AdamState<T> state;
    state.hyper = hyper;
    state.m.resize(params.layers.size());
    state.v.resize(params.layers.size());
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        if (!model.layers[i].trainable) continue;
        const auto& slot = params.layers[i];
        const auto zeros_like = [](const Tensor<T>& t) {
            return t.empty() ? Tensor<T>() : Tensor<T>(t.shape);
        };
        state.m[i].weight = zeros_like(slot.weight);
        state.m[i].bias = zeros_like(slot.bias);
        state.m[i].gamma = zeros_like(slot.gamma);
        state.m[i].beta = zeros_like(slot.beta);
        state.v[i].weight = zeros_like(slot.weight);
        state.v[i].bias = zeros_like(slot.bias);
        state.v[i].gamma = zeros_like(slot.gamma);
        state.v[i].beta = zeros_like(slot.beta);
    }
    return state;
}

namespace {

template <typename T>
void update_tensor(Tensor<T>& p, const Tensor<T>& g, Tensor<T>& m, Tensor<T>& v,
                   const AdamConfig& h, std::uint64_t t, const std::string& name) {
    if (!p.same_shape(g)) throw DimensionError("adam_step: gradient shape mismatch for " + name);
    for (const T gv : g.data)
        if (!std::isfinite(static_cast<double>(gv)))
            throw NumericError("non-finite gradient in tensor " + name);

    const T b1 = static_cast<T>(h.beta1);
    const T b2 = static_cast<T>(h.beta2);
    const T lr = static_cast<T>(h.lr);
    const T eps = static_cast<T>(h.epsilon);
    const T bc1 = T{1} - static_cast<T>(std::pow(h.beta1, static_cast<double>(t)));
    const T bc2 = T{1} - static_cast<T>(std::pow(h.beta2, static_cast<double>(t)));

    parallel_for(p.size(), [&](std::size_t i) {
        const T gv = g.data[i];
        m.data[i] = b1 * m.data[i] + (T{1} - b1) * gv;
        v.data[i] = b2 * v.data[i] + (T{1} - b2) * gv * gv;
        const T mhat = m.data[i] / bc1;
        const T vhat = v.data[i] / bc2;
        p.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    });
}

}  // namespace

template <typename T>
void adam_step(const ModelSpec& model, Params<T>& params, const Grads<T>& grads,
               AdamState<T>& state) {
    if (grads.layers.size() != params.layers.size())
        throw DimensionError("adam_step: grads do not match params");

    state.t += 1;
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        if (!model.layers[i].trainable) continue;
        auto& p = params.layers[i];
        const auto& g = grads.layers[i];
        auto& m = state.m[i];
        auto& v = state.v[i];
        const std::string prefix = "L" + std::to_string(i) + ".";
        if (!g.weight.empty())
            update_tensor(p.weight, g.weight, m.weight, v.weight, state.hyper, state.t,
                          prefix + "weight");
        if (!g.bias.empty())
            update_tensor(p.bias, g.bias, m.bias, v.bias, state.hyper, state.t, prefix + "bias");
        if (!g.gamma.empty())
            update_tensor(p.gamma, g.gamma, m.gamma, v.gamma, state.hyper, state.t,
                          prefix + "gamma");
        if (!g.beta.empty())
            update_tensor(p.beta, g.beta, m.beta, v.beta, state.hyper, state.t, prefix + "beta");
    }
    params.revision += 1;
}

template AdamState<float> make_adam_state<float>(const ModelSpec&, const Params<float>&,
                                                 AdamConfig);
template AdamState<double> make_adam_state<double>(const ModelSpec&, const Params<double>&,
                                                   AdamConfig);
template void adam_step<float>(const ModelSpec&, Params<float>&, const Grads<float>&,
                               AdamState<float>&);
template void adam_step<double>(const ModelSpec&, Params<double>&, const Grads<double>&,
                                AdamState<double>&);

}  // namespace hstl::nn
