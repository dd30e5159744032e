#pragma once

#include "hstl/nn/layer_spec.hpp"
#include "hstl/rng.hpp"
#include "hstl/tensor.hpp"

namespace hstl::nn {

// Layer math. Accumulation orders are part of the contract: each output
// element is a single accumulator fed in a fixed index order (documented
// per op), so results are bit-identical across thread counts and match
// naive loop references exactly.

// y[i][j] = b[j] + sum_k x[i][k] * w[k][j], k ascending.
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

// dx = dy.w^T (j ascending), dw = x^T.dy (i ascending), db = column sums
// of dy (i ascending).
template <typename T>
void dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, Tensor<T>& dx,
                    Tensor<T>& dw, Tensor<T>& db);

// x [n, ch, h, w], kernel [oc, ch, 3, 3], stride 1, zero padding 1
// ("same"), cross-correlation. Accumulator seeded with bias, taps added
// in ascending (ch, ku, kv) order.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias);

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& dy,
                     Tensor<T>& dx, Tensor<T>& dk, Tensor<T>& db);

// x [n, ch, d, h, w], kernel [oc, ch, kd, 3, 3]; spectral axis valid
// (output depth d-kd+1), spatial axes "same". Taps added in ascending
// (ch, kw, ku, kv) order.
template <typename T>
Tensor<T> conv3d_forward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias);

template <typename T>
void conv3d_backward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& dy,
                     Tensor<T>& dx, Tensor<T>& dk, Tensor<T>& db);

// Per-batch cache the backward pass needs.
template <typename T>
struct BatchNormCache {
    Tensor<T> xhat;
    std::vector<T> inv_std;       // per feature
    bool used_batch_stats = false;
};

// Training with use_batch_stats: normalize by batch mean / biased variance,
// update running stats as new = momentum*old + (1-momentum)*batch.
// Otherwise normalize by the stored running statistics.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, const BatchNorm& spec, Tensor<T>& gamma,
                            Tensor<T>& beta, Tensor<T>& running_mean, Tensor<T>& running_var,
                            bool use_batch_stats, BatchNormCache<T>& cache);

template <typename T>
void batchnorm_backward(const Tensor<T>& dy, const BatchNorm& spec, const Tensor<T>& gamma,
                        const BatchNormCache<T>& cache, Tensor<T>& dx, Tensor<T>& dgamma,
                        Tensor<T>& dbeta);

// Inverted dropout: training zeroes each element with probability rate
// (PCG32 u01 draws in row-major order) and scales survivors by
// 1/(1-rate); inference is the identity. mask holds the applied scale
// per element (0 or 1/(1-rate)).
template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& x, double rate, bool training, Pcg32* rng,
                          Tensor<T>& mask);

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& dy, const Tensor<T>& mask);

template <typename T>
Tensor<T> activation_forward(const Tensor<T>& x, const Activation& act);

// relu / leaky_relu only; softmax gradients flow through
// softmax_cross_entropy instead.
template <typename T>
Tensor<T> activation_backward(const Tensor<T>& x, const Tensor<T>& dy, const Activation& act);

// Row-wise max-subtracted softmax.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits);

template <typename T>
struct SoftmaxXentResult {
    T loss{};             // mean over samples of -ln p[label]
    Tensor<T> dlogits;    // (probs - onehot) / n
    Tensor<T> probs;
};

template <typename T>
SoftmaxXentResult<T> softmax_cross_entropy(const Tensor<T>& logits,
                                           const std::vector<std::uint16_t>& labels);

}  // namespace hstl::nn
