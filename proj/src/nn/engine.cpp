#include "hstl/nn/engine.hpp"

#include <algorithm>
#include <cmath>

#include "hstl/errors.hpp"

namespace hstl::nn {

namespace {

template <typename T>
std::vector<std::size_t> with_batch(std::size_t n, const std::vector<std::size_t>& shape) {
    std::vector<std::size_t> s{n};
    s.insert(s.end(), shape.begin(), shape.end());
    return s;
}

}  // namespace

template <typename T>
Trace<T> forward(const ModelSpec& model, Params<T>& params, const Tensor<T>& x,
                 EngineMode mode, Pcg32* rng) {
    validate_params(model, params);
    if (x.shape.size() != model.input_shape.size() + 1 ||
        !std::equal(model.input_shape.begin(), model.input_shape.end(), x.shape.begin() + 1))
        throw DimensionError("forward: batch shape " + shape_str(x.shape) +
                             " does not match input shape " + shape_str(model.input_shape));

    const std::size_t L = model.layers.size();
    Trace<T> trace;
    trace.training = mode.training;
    trace.params_revision = params.revision;
    trace.inputs.reserve(L);
    trace.dropout_masks.resize(L);
    trace.bn_caches.resize(L);

    Tensor<T> cur = x;
    for (std::size_t i = 0; i < L; ++i) {
        trace.inputs.push_back(cur);
        const auto& layer = model.layers[i];
        auto& slot = params.layers[i];

        if (std::holds_alternative<Dense>(layer.spec)) {
            cur = dense_forward(cur, slot.weight, slot.bias);
        } else if (std::holds_alternative<Conv2D>(layer.spec)) {
            cur = conv2d_forward(cur, slot.weight, slot.bias);
        } else if (std::holds_alternative<Conv3D>(layer.spec)) {
            cur = conv3d_forward(cur, slot.weight, slot.bias);
        } else if (const auto* bn = std::get_if<BatchNorm>(&layer.spec)) {
            const bool batch_stats = mode.training && layer.trainable;
            cur = batchnorm_forward(cur, *bn, slot.gamma, slot.beta, slot.running_mean,
                                    slot.running_var, batch_stats, trace.bn_caches[i]);
        } else if (const auto* dr = std::get_if<Dropout>(&layer.spec)) {
            cur = dropout_forward(cur, dr->rate, mode.training, rng, trace.dropout_masks[i]);
        } else if (const auto* act = std::get_if<Activation>(&layer.spec)) {
            cur = activation_forward(cur, *act);
        } else if (std::holds_alternative<Flatten>(layer.spec)) {
            cur = cur.reshaped({cur.shape[0], cur.size() / cur.shape[0]});
        } else if (std::holds_alternative<Reshape3Dto2D>(layer.spec)) {
            cur = cur.reshaped(
                {cur.shape[0], cur.shape[1] * cur.shape[2], cur.shape[3], cur.shape[4]});
        }
    }
    trace.output = std::move(cur);
    return trace;
}

template <typename T>
T trace_loss(const Trace<T>& trace, const ModelSpec& model,
             const std::vector<std::uint16_t>& labels) {
    // inputs.back() is the softmax layer's input, i.e. the logits.
    (void)model;
    return softmax_cross_entropy(trace.inputs.back(), labels).loss;
}

template <typename T>
Grads<T> backward(const ModelSpec& model, const Params<T>& params, const Trace<T>& trace,
                  const std::vector<std::uint16_t>& labels) {
    if (!trace.training)
        throw ContractError("backward requires a trace recorded in training mode");
    if (trace.params_revision != params.revision)
        throw ContractError("stale trace: params changed since forward");
    if (trace.inputs.size() != model.layers.size())
        throw ContractError("trace does not match model depth");

    const std::size_t L = model.layers.size();
    Grads<T> grads;
    grads.layers.resize(L);

    // Seed: d(loss)/d(logits) from the fused softmax + cross-entropy.
    Tensor<T> dcur = softmax_cross_entropy(trace.inputs[L - 1], labels).dlogits;

    for (std::size_t idx = L - 1; idx-- > 0;) {
        const auto& layer = model.layers[idx];
        const auto& slot = params.layers[idx];
        const Tensor<T>& x = trace.inputs[idx];

        if (std::holds_alternative<Dense>(layer.spec)) {
            Tensor<T> dx, dw, db;
            dense_backward(x, slot.weight, dcur, dx, dw, db);
            if (layer.trainable) {
                grads.layers[idx].weight = std::move(dw);
                grads.layers[idx].bias = std::move(db);
            }
            dcur = std::move(dx);
        } else if (std::holds_alternative<Conv2D>(layer.spec)) {
            Tensor<T> dx, dk, db;
            conv2d_backward(x, slot.weight, dcur, dx, dk, db);
            if (layer.trainable) {
                grads.layers[idx].weight = std::move(dk);
                grads.layers[idx].bias = std::move(db);
            }
            dcur = std::move(dx);
        } else if (std::holds_alternative<Conv3D>(layer.spec)) {
            Tensor<T> dx, dk, db;
            conv3d_backward(x, slot.weight, dcur, dx, dk, db);
            if (layer.trainable) {
                grads.layers[idx].weight = std::move(dk);
                grads.layers[idx].bias = std::move(db);
            }
            dcur = std::move(dx);
        } else if (const auto* bn = std::get_if<BatchNorm>(&layer.spec)) {
            Tensor<T> dx, dgamma, dbeta;
            batchnorm_backward(dcur, *bn, slot.gamma, trace.bn_caches[idx], dx, dgamma, dbeta);
            if (layer.trainable) {
                grads.layers[idx].gamma = std::move(dgamma);
                grads.layers[idx].beta = std::move(dbeta);
            }
            dcur = std::move(dx);
        } else if (std::holds_alternative<Dropout>(layer.spec)) {
            dcur = dropout_backward(dcur, trace.dropout_masks[idx]);
        } else if (const auto* act = std::get_if<Activation>(&layer.spec)) {
            dcur = activation_backward(x, dcur, *act);
        } else if (std::holds_alternative<Flatten>(layer.spec) ||
                   std::holds_alternative<Reshape3Dto2D>(layer.spec)) {
            dcur = dcur.reshaped(x.shape);
        }
    }
    return grads;
}

double grad_check(const ModelSpec& model, Params<double>& params, const Tensor<double>& x,
                  const std::vector<std::uint16_t>& labels, double step,
                  std::size_t max_per_tensor, std::uint64_t subsample_seed) {
    // Dropout would change masks between the two difference evaluations;
    // zero the rates for the check.
    ModelSpec clean = model;
    for (auto& layer : clean.layers)
        if (auto* dr = std::get_if<Dropout>(&layer.spec)) dr->rate = 0.0;

    // The check runs in extended precision: central differences in plain
    // f64 carry ~1e-11 cancellation noise, which would swamp the
    // mathematically tiny gradients (a bias feeding batch norm has an
    // exactly zero one). Work on a copy; training-mode forwards advance
    // batch-norm running stats, which must not leak back to the caller.
    Params<long double> work;
    work.layers.resize(params.layers.size());
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        work.layers[i].weight = params.layers[i].weight.cast<long double>();
        work.layers[i].bias = params.layers[i].bias.cast<long double>();
        work.layers[i].gamma = params.layers[i].gamma.cast<long double>();
        work.layers[i].beta = params.layers[i].beta.cast<long double>();
        work.layers[i].running_mean = params.layers[i].running_mean.cast<long double>();
        work.layers[i].running_var = params.layers[i].running_var.cast<long double>();
    }
    const Tensor<long double> xl = x.cast<long double>();

    const EngineMode mode{.training = true};
    Trace<long double> trace = forward(clean, work, xl, mode);
    Grads<long double> grads = backward(clean, work, trace, labels);

    const auto loss_at = [&]() {
        Trace<long double> t = forward(clean, work, xl, mode);
        return trace_loss(t, clean, labels);
    };

    const auto h = static_cast<long double>(step);
    double max_rel = 0.0;
    Pcg32 pick(subsample_seed);
    for (std::size_t li = 0; li < clean.layers.size(); ++li) {
        if (!clean.layers[li].trainable) continue;
        const std::pair<Tensor<long double>*, Tensor<long double>*> slots[] = {
            {&work.layers[li].weight, &grads.layers[li].weight},
            {&work.layers[li].bias, &grads.layers[li].bias},
            {&work.layers[li].gamma, &grads.layers[li].gamma},
            {&work.layers[li].beta, &grads.layers[li].beta},
        };
        for (const auto& [tensor, grad] : slots) {
            if (tensor->empty() || grad->empty()) continue;

            std::vector<std::size_t> picks;
            if (tensor->size() <= max_per_tensor) {
                picks.resize(tensor->size());
                for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
            } else {
                for (std::size_t i = 0; i < max_per_tensor; ++i)
                    picks.push_back(pick.bounded(static_cast<std::uint32_t>(tensor->size())));
            }

            for (const std::size_t i : picks) {
                const long double saved = tensor->data[i];
                const long double analytic = grad->data[i];

                // A perturbation of size h can straddle a downstream ReLU
                // kink, where the central difference measures a blend of
                // two slopes. Refine the step until the difference
                // converges; only a mismatch that persists at every step
                // is a real gradient defect.
                long double best = std::numeric_limits<long double>::infinity();
                for (long double hh = h; hh >= h / 100.0L; hh /= 10.0L) {
                    tensor->data[i] = saved + hh;
                    const long double lp = loss_at();
                    tensor->data[i] = saved - hh;
                    const long double lm = loss_at();
                    tensor->data[i] = saved;

                    const long double numeric = (lp - lm) / (2.0L * hh);
                    const long double rel =
                        std::abs(analytic - numeric) /
                        std::max({std::abs(analytic), std::abs(numeric), 1e-8L});
                    best = std::min(best, rel);
                    if (best < 1e-7L) break;
                }
                max_rel = std::max(max_rel, static_cast<double>(best));
            }
        }
    }
    return max_rel;
}

template Trace<float> forward<float>(const ModelSpec&, Params<float>&, const Tensor<float>&,
                                     EngineMode, Pcg32*);
template Trace<double> forward<double>(const ModelSpec&, Params<double>&, const Tensor<double>&,
                                       EngineMode, Pcg32*);
template Grads<float> backward<float>(const ModelSpec&, const Params<float>&, const Trace<float>&,
                                      const std::vector<std::uint16_t>&);
template Grads<double> backward<double>(const ModelSpec&, const Params<double>&,
                                        const Trace<double>&, const std::vector<std::uint16_t>&);
template float trace_loss<float>(const Trace<float>&, const ModelSpec&,
                                 const std::vector<std::uint16_t>&);
template double trace_loss<double>(const Trace<double>&, const ModelSpec&,
                                   const std::vector<std::uint16_t>&);
template Trace<long double> forward<long double>(const ModelSpec&, Params<long double>&,
                                                 const Tensor<long double>&, EngineMode, Pcg32*);
template Grads<long double> backward<long double>(const ModelSpec&, const Params<long double>&,
                                                  const Trace<long double>&,
                                                  const std::vector<std::uint16_t>&);
template long double trace_loss<long double>(const Trace<long double>&, const ModelSpec&,
                                             const std::vector<std::uint16_t>&);

}  // namespace hstl::nn
