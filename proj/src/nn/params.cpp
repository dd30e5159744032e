#include "hstl/nn/params.hpp"

#include <cmath>

#include "hstl/errors.hpp"
#include "hstl/rng.hpp"

namespace hstl::nn {

namespace {

struct FanInfo {
    std::size_t fan_in = 0, fan_out = 0;
    bool parameterized = false;
};

FanInfo fan_of(const LayerSpec& spec) {
    if (const auto* d = std::get_if<Dense>(&spec)) return {d->in, d->out, true};
    if (const auto* c = std::get_if<Conv2D>(&spec)) return {c->in_ch * 9, c->out_ch * 9, true};
    if (const auto* c = std::get_if<Conv3D>(&spec))
        return {c->in_ch * c->k_spec * 9, c->out_ch * c->k_spec * 9, true};
    return {};
}

// The activation a weight layer feeds decides its init scale; batchnorm,
// dropout and reshapes between them are transparent.
Act downstream_activation(const ModelSpec& model, std::size_t layer_idx) {
    for (std::size_t i = layer_idx + 1; i < model.layers.size(); ++i) {
        if (const auto* act = std::get_if<Activation>(&model.layers[i].spec)) return act->kind;
        if (std::holds_alternative<Dense>(model.layers[i].spec) ||
            std::holds_alternative<Conv2D>(model.layers[i].spec) ||
            std::holds_alternative<Conv3D>(model.layers[i].spec))
            break;
    }
    return Act::softmax;
}

}  // namespace

template <typename T>
Params<T> init_params(const ModelSpec& model, std::uint64_t seed) {
    infer_shapes(model);

    Params<T> params;
    params.layers.resize(model.layers.size());
    Pcg32 rng(seed);

    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& spec = model.layers[i].spec;
        auto& slot = params.layers[i];

        if (const auto* bn = std::get_if<BatchNorm>(&spec)) {
            slot.gamma = Tensor<T>({bn->features});
            slot.beta = Tensor<T>({bn->features});
            slot.running_mean = Tensor<T>({bn->features});
            slot.running_var = Tensor<T>({bn->features});
            for (auto& g : slot.gamma.data) g = T{1};
            for (auto& v : slot.running_var.data) v = T{1};
            continue;
        }

        const FanInfo fan = fan_of(spec);
        if (!fan.parameterized) continue;

        const Act act = downstream_activation(model, i);
        const double bound =
            act == Act::softmax
                ? std::sqrt(6.0 / static_cast<double>(fan.fan_in + fan.fan_out))
                : std::sqrt(6.0 / static_cast<double>(fan.fan_in));

        if (const auto* d = std::get_if<Dense>(&spec)) {
            slot.weight = Tensor<T>({d->in, d->out});
            slot.bias = Tensor<T>({d->out});
        } else if (const auto* c = std::get_if<Conv2D>(&spec)) {
            slot.weight = Tensor<T>({c->out_ch, c->in_ch, 3, 3});
            slot.bias = Tensor<T>({c->out_ch});
        } else if (const auto* c = std::get_if<Conv3D>(&spec)) {
            slot.weight = Tensor<T>({c->out_ch, c->in_ch, c->k_spec, 3, 3});
            slot.bias = Tensor<T>({c->out_ch});
        }
        for (auto& w : slot.weight.data)
            w = static_cast<T>(bound * (2.0 * rng.next_double() - 1.0));
    }
    return params;
}

template <typename T>
void for_each_tensor(const ModelSpec& model, Params<T>& params,
                     const std::function<void(std::size_t, const std::string&, Tensor<T>&,
                                              bool)>& fn) {
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        const bool trainable = model.layers[i].trainable;
        auto& slot = params.layers[i];
        if (!slot.weight.empty()) fn(i, "weight", slot.weight, trainable);
        if (!slot.bias.empty()) fn(i, "bias", slot.bias, trainable);
        if (!slot.gamma.empty()) fn(i, "gamma", slot.gamma, trainable);
        if (!slot.beta.empty()) fn(i, "beta", slot.beta, trainable);
        // Running stats are state, not parameters; never trainable.
        if (!slot.running_mean.empty()) fn(i, "running_mean", slot.running_mean, false);
        if (!slot.running_var.empty()) fn(i, "running_var", slot.running_var, false);
    }
}

template <typename T>
void for_each_tensor(const ModelSpec& model, const Params<T>& params,
                     const std::function<void(std::size_t, const std::string&, const Tensor<T>&,
                                              bool)>& fn) {
    const std::function<void(std::size_t, const std::string&, Tensor<T>&, bool)> shim =
        [&](std::size_t i, const std::string& name, Tensor<T>& t, bool trainable) {
            fn(i, name, t, trainable);
        };
    for_each_tensor(model, const_cast<Params<T>&>(params), shim);
}

template <typename T>
void validate_params(const ModelSpec& model, const Params<T>& params) {
    if (params.layers.size() != model.layers.size())
        throw DimensionError("params layer count does not match spec");
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& spec = model.layers[i].spec;
        const auto& slot = params.layers[i];
        const auto check = [&](const Tensor<T>& t, std::vector<std::size_t> want,
                               const char* name) {
            if (t.shape != want)
                throw DimensionError("layer " + std::to_string(i) + " (" + layer_name(spec) +
                                     ") tensor " + name + " has shape " + shape_str(t.shape) +
                                     ", expected " + shape_str(want));
        };
        if (const auto* d = std::get_if<Dense>(&spec)) {
            check(slot.weight, {d->in, d->out}, "weight");
            check(slot.bias, {d->out}, "bias");
        } else if (const auto* c = std::get_if<Conv2D>(&spec)) {
            check(slot.weight, {c->out_ch, c->in_ch, 3, 3}, "weight");
            check(slot.bias, {c->out_ch}, "bias");
        } else if (const auto* c = std::get_if<Conv3D>(&spec)) {
            check(slot.weight, {c->out_ch, c->in_ch, c->k_spec, 3, 3}, "weight");
            check(slot.bias, {c->out_ch}, "bias");
        } else if (const auto* bn = std::get_if<BatchNorm>(&spec)) {
            check(slot.gamma, {bn->features}, "gamma");
            check(slot.beta, {bn->features}, "beta");
            check(slot.running_mean, {bn->features}, "running_mean");
            check(slot.running_var, {bn->features}, "running_var");
            for (const T v : slot.running_var.data)
                if (v < T{0}) throw ValidationError("running_var must be nonnegative");
        }
    }
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> layer_tensor_shapes(
    const LayerSpec& spec) {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
    if (const auto* d = std::get_if<Dense>(&spec)) {
        out.push_back({"weight", {d->in, d->out}});
        out.push_back({"bias", {d->out}});
    } else if (const auto* c = std::get_if<Conv2D>(&spec)) {
        out.push_back({"weight", {c->out_ch, c->in_ch, 3, 3}});
        out.push_back({"bias", {c->out_ch}});
    } else if (const auto* c = std::get_if<Conv3D>(&spec)) {
        out.push_back({"weight", {c->out_ch, c->in_ch, c->k_spec, 3, 3}});
        out.push_back({"bias", {c->out_ch}});
    } else if (const auto* bn = std::get_if<BatchNorm>(&spec)) {
        out.push_back({"gamma", {bn->features}});
        out.push_back({"beta", {bn->features}});
        out.push_back({"running_mean", {bn->features}});
        out.push_back({"running_var", {bn->features}});
    }
    return out;
}

template Params<float> init_params<float>(const ModelSpec&, std::uint64_t);
template Params<double> init_params<double>(const ModelSpec&, std::uint64_t);
template void for_each_tensor<float>(
    const ModelSpec&, Params<float>&,
    const std::function<void(std::size_t, const std::string&, Tensor<float>&, bool)>&);
template void for_each_tensor<double>(
    const ModelSpec&, Params<double>&,
    const std::function<void(std::size_t, const std::string&, Tensor<double>&, bool)>&);
template void for_each_tensor<float>(
    const ModelSpec&, const Params<float>&,
    const std::function<void(std::size_t, const std::string&, const Tensor<float>&, bool)>&);
template void for_each_tensor<double>(
    const ModelSpec&, const Params<double>&,
    const std::function<void(std::size_t, const std::string&, const Tensor<double>&, bool)>&);
template void validate_params<float>(const ModelSpec&, const Params<float>&);
template void validate_params<double>(const ModelSpec&, const Params<double>&);
template void validate_params<long double>(const ModelSpec&, const Params<long double>&);

}  // namespace hstl::nn
