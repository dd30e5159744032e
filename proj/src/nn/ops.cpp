#include "hstl/nn/ops.hpp"

#include <cmath>

#include "hstl/errors.hpp"
#include "hstl/threading.hpp"

namespace hstl::nn {

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    if (x.shape.size() != 2 || w.shape.size() != 2 || b.shape.size() != 1 ||
        x.shape[1] != w.shape[0] || w.shape[1] != b.shape[0])
        throw DimensionError("dense_forward: incompatible shapes " + shape_str(x.shape) + " x " +
                             shape_str(w.shape) + " + " + shape_str(b.shape));
    const std::size_t n = x.shape[0], in = x.shape[1], out = w.shape[1];

    Tensor<T> y({n, out});
    parallel_for(n, [&](std::size_t i) {
        const T* xi = x.ptr() + i * in;
        T* yi = y.ptr() + i * out;
        for (std::size_t j = 0; j < out; ++j) yi[j] = b.data[j];
        for (std::size_t k = 0; k < in; ++k) {
            const T xik = xi[k];
            const T* wk = w.ptr() + k * out;
            for (std::size_t j = 0; j < out; ++j) yi[j] += xik * wk[j];
        }
    });
    return y;
}

template <typename T>
void dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, Tensor<T>& dx,
                    Tensor<T>& dw, Tensor<T>& db) {
    const std::size_t n = x.shape[0], in = x.shape[1], out = w.shape[1];
    if (dy.shape != std::vector<std::size_t>{n, out})
        throw DimensionError("dense_backward: dy shape mismatch");

    dx = Tensor<T>({n, in});
    dw = Tensor<T>({in, out});
    db = Tensor<T>({out});

    parallel_for(n, [&](std::size_t i) {
        const T* dyi = dy.ptr() + i * out;
        T* dxi = dx.ptr() + i * in;
        for (std::size_t k = 0; k < in; ++k) {
            const T* wk = w.ptr() + k * out;
            T acc{};
            for (std::size_t j = 0; j < out; ++j) acc += dyi[j] * wk[j];
            dxi[k] = acc;
        }
    });
    parallel_for(in, [&](std::size_t k) {
        T* dwk = dw.ptr() + k * out;
        for (std::size_t i = 0; i < n; ++i) {
            const T xik = x.data[i * in + k];
            const T* dyi = dy.ptr() + i * out;
            for (std::size_t j = 0; j < out; ++j) dwk[j] += xik * dyi[j];
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        const T* dyi = dy.ptr() + i * out;
        for (std::size_t j = 0; j < out; ++j) db.data[j] += dyi[j];
    }
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias) {
    if (x.shape.size() != 4 || kernel.shape.size() != 4 || kernel.shape[2] != 3 ||
        kernel.shape[3] != 3 || x.shape[1] != kernel.shape[1] ||
        bias.shape != std::vector<std::size_t>{kernel.shape[0]})
        throw DimensionError("conv2d_forward: incompatible shapes");
    const std::size_t n = x.shape[0], ic = x.shape[1], h = x.shape[2], w = x.shape[3];
    const std::size_t oc = kernel.shape[0];

    Tensor<T> y({n, oc, h, w});
    parallel_for(n * oc, [&](std::size_t no) {
        const std::size_t ni = no / oc, o = no % oc;
        const T* xk = x.ptr() + ni * ic * h * w;
        const T* ko = kernel.ptr() + o * ic * 9;
        T* yo = y.ptr() + (ni * oc + o) * h * w;
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) {
                T acc = bias.data[o];
                for (std::size_t c = 0; c < ic; ++c)
                    for (std::size_t u = 0; u < 3; ++u) {
                        const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i + u) - 1;
                        if (r < 0 || r >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t v = 0; v < 3; ++v) {
                            const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(j + v) - 1;
                            if (s < 0 || s >= static_cast<std::ptrdiff_t>(w)) continue;
                            acc += xk[(c * h + r) * w + s] * ko[(c * 3 + u) * 3 + v];
                        }
                    }
                yo[i * w + j] = acc;
            }
    });
    return y;
}

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& dy,
                     Tensor<T>& dx, Tensor<T>& dk, Tensor<T>& db) {
    const std::size_t n = x.shape[0], ic = x.shape[1], h = x.shape[2], w = x.shape[3];
    const std::size_t oc = kernel.shape[0];
    if (dy.shape != std::vector<std::size_t>{n, oc, h, w})
        throw DimensionError("conv2d_backward: dy shape mismatch");

    dx = Tensor<T>(x.shape);
    dk = Tensor<T>(kernel.shape);
    db = Tensor<T>({oc});

    // dx[p][q] gathers dy taps in ascending (o, u, v) order.
    parallel_for(n * ic, [&](std::size_t nc) {
        const std::size_t ni = nc / ic, c = nc % ic;
        const T* dyn = dy.ptr() + ni * oc * h * w;
        T* dxc = dx.ptr() + (ni * ic + c) * h * w;
        for (std::size_t p = 0; p < h; ++p)
            for (std::size_t q = 0; q < w; ++q) {
                T acc{};
                for (std::size_t o = 0; o < oc; ++o) {
                    const T* ko = kernel.ptr() + (o * ic + c) * 9;
                    for (std::size_t u = 0; u < 3; ++u) {
                        const std::ptrdiff_t i = static_cast<std::ptrdiff_t>(p) -
                                                 (static_cast<std::ptrdiff_t>(u) - 1);
                        if (i < 0 || i >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t v = 0; v < 3; ++v) {
                            const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(q) -
                                                     (static_cast<std::ptrdiff_t>(v) - 1);
                            if (j < 0 || j >= static_cast<std::ptrdiff_t>(w)) continue;
                            acc += dyn[(o * h + i) * w + j] * ko[u * 3 + v];
                        }
                    }
                }
                dxc[p * w + q] = acc;
            }
    });

    // dk entries accumulate over (n, i, j) ascending.
    parallel_for(oc, [&](std::size_t o) {
        T* dko = dk.ptr() + o * ic * 9;
        for (std::size_t c = 0; c < ic; ++c)
            for (std::size_t u = 0; u < 3; ++u)
                for (std::size_t v = 0; v < 3; ++v) {
                    T acc{};
                    for (std::size_t ni = 0; ni < n; ++ni) {
                        const T* xc = x.ptr() + (ni * ic + c) * h * w;
                        const T* dyo = dy.ptr() + (ni * oc + o) * h * w;
                        for (std::size_t i = 0; i < h; ++i) {
                            const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i + u) - 1;
                            if (r < 0 || r >= static_cast<std::ptrdiff_t>(h)) continue;
                            for (std::size_t j = 0; j < w; ++j) {
                                const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(j + v) - 1;
                                if (s < 0 || s >= static_cast<std::ptrdiff_t>(w)) continue;
                                acc += xc[r * w + s] * dyo[i * w + j];
                            }
                        }
                    }
                    dko[(c * 3 + u) * 3 + v] = acc;
                }
    });

    for (std::size_t ni = 0; ni < n; ++ni)
        for (std::size_t o = 0; o < oc; ++o) {
            const T* dyo = dy.ptr() + (ni * oc + o) * h * w;
            T acc{};
            for (std::size_t i = 0; i < h * w; ++i) acc += dyo[i];
            db.data[o] += acc;
        }
}

template <typename T>
Tensor<T> conv3d_forward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias) {
    if (x.shape.size() != 5 || kernel.shape.size() != 5 || kernel.shape[3] != 3 ||
        kernel.shape[4] != 3 || x.shape[1] != kernel.shape[1] ||
        bias.shape != std::vector<std::size_t>{kernel.shape[0]})
        throw DimensionError("conv3d_forward: incompatible shapes");
    const std::size_t n = x.shape[0], ic = x.shape[1], d = x.shape[2], h = x.shape[3],
                      w = x.shape[4];
    const std::size_t oc = kernel.shape[0], kd = kernel.shape[2];
    if (d < kd)
        throw DimensionError("conv3d_forward: spectral depth " + std::to_string(d) +
                             " below kernel depth " + std::to_string(kd));
    const std::size_t od = d - kd + 1;

    Tensor<T> y({n, oc, od, h, w});
    parallel_for(n * oc, [&](std::size_t no) {
        const std::size_t ni = no / oc, o = no % oc;
        const T* xn = x.ptr() + ni * ic * d * h * w;
        const T* ko = kernel.ptr() + o * ic * kd * 9;
        T* yo = y.ptr() + (ni * oc + o) * od * h * w;
        for (std::size_t e = 0; e < od; ++e)
            for (std::size_t i = 0; i < h; ++i)
                for (std::size_t j = 0; j < w; ++j) {
                    T acc = bias.data[o];
                    for (std::size_t c = 0; c < ic; ++c)
                        for (std::size_t f = 0; f < kd; ++f)
                            for (std::size_t u = 0; u < 3; ++u) {
                                const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i + u) - 1;
                                if (r < 0 || r >= static_cast<std::ptrdiff_t>(h)) continue;
                                for (std::size_t v = 0; v < 3; ++v) {
                                    const std::ptrdiff_t s =
                                        static_cast<std::ptrdiff_t>(j + v) - 1;
                                    if (s < 0 || s >= static_cast<std::ptrdiff_t>(w)) continue;
                                    acc += xn[((c * d + e + f) * h + r) * w + s] *
                                           ko[((c * kd + f) * 3 + u) * 3 + v];
                                }
                            }
                    yo[(e * h + i) * w + j] = acc;
                }
    });
    return y;
}

template <typename T>
void conv3d_backward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& dy,
                     Tensor<T>& dx, Tensor<T>& dk, Tensor<T>& db) {
    const std::size_t n = x.shape[0], ic = x.shape[1], d = x.shape[2], h = x.shape[3],
                      w = x.shape[4];
    const std::size_t oc = kernel.shape[0], kd = kernel.shape[2];
    const std::size_t od = d - kd + 1;
    if (dy.shape != std::vector<std::size_t>{n, oc, od, h, w})
        throw DimensionError("conv3d_backward: dy shape mismatch");

    dx = Tensor<T>(x.shape);
    dk = Tensor<T>(kernel.shape);
    db = Tensor<T>({oc});

    parallel_for(n * ic, [&](std::size_t nc) {
        const std::size_t ni = nc / ic, c = nc % ic;
        const T* dyn = dy.ptr() + ni * oc * od * h * w;
        T* dxc = dx.ptr() + (ni * ic + c) * d * h * w;
        for (std::size_t e = 0; e < d; ++e)
            for (std::size_t p = 0; p < h; ++p)
                for (std::size_t q = 0; q < w; ++q) {
                    T acc{};
                    for (std::size_t o = 0; o < oc; ++o) {
                        const T* ko = kernel.ptr() + (o * ic + c) * kd * 9;
                        for (std::size_t f = 0; f < kd; ++f) {
                            const std::ptrdiff_t de = static_cast<std::ptrdiff_t>(e) -
                                                      static_cast<std::ptrdiff_t>(f);
                            if (de < 0 || de >= static_cast<std::ptrdiff_t>(od)) continue;
                            for (std::size_t u = 0; u < 3; ++u) {
                                const std::ptrdiff_t i = static_cast<std::ptrdiff_t>(p) -
                                                         (static_cast<std::ptrdiff_t>(u) - 1);
                                if (i < 0 || i >= static_cast<std::ptrdiff_t>(h)) continue;
                                for (std::size_t v = 0; v < 3; ++v) {
                                    const std::ptrdiff_t j =
                                        static_cast<std::ptrdiff_t>(q) -
                                        (static_cast<std::ptrdiff_t>(v) - 1);
                                    if (j < 0 || j >= static_cast<std::ptrdiff_t>(w)) continue;
                                    acc += dyn[((o * od + de) * h + i) * w + j] *
                                           ko[(f * 3 + u) * 3 + v];
                                }
                            }
                        }
                    }
                    dxc[(e * h + p) * w + q] = acc;
                }
    });

    parallel_for(oc, [&](std::size_t o) {
        T* dko = dk.ptr() + o * ic * kd * 9;
        for (std::size_t c = 0; c < ic; ++c)
            for (std::size_t f = 0; f < kd; ++f)
                for (std::size_t u = 0; u < 3; ++u)
                    for (std::size_t v = 0; v < 3; ++v) {
                        T acc{};
                        for (std::size_t ni = 0; ni < n; ++ni) {
                            const T* xc = x.ptr() + (ni * ic + c) * d * h * w;
                            const T* dyo = dy.ptr() + (ni * oc + o) * od * h * w;
                            for (std::size_t e = 0; e < od; ++e)
                                for (std::size_t i = 0; i < h; ++i) {
                                    const std::ptrdiff_t r =
                                        static_cast<std::ptrdiff_t>(i + u) - 1;
                                    if (r < 0 || r >= static_cast<std::ptrdiff_t>(h)) continue;
                                    for (std::size_t j = 0; j < w; ++j) {
                                        const std::ptrdiff_t s =
                                            static_cast<std::ptrdiff_t>(j + v) - 1;
                                        if (s < 0 || s >= static_cast<std::ptrdiff_t>(w))
                                            continue;
                                        acc += xc[((e + f) * h + r) * w + s] *
                                               dyo[(e * h + i) * w + j];
                                    }
                                }
                        }
                        dko[((c * kd + f) * 3 + u) * 3 + v] = acc;
                    }
    });

    for (std::size_t ni = 0; ni < n; ++ni)
        for (std::size_t o = 0; o < oc; ++o) {
            const T* dyo = dy.ptr() + (ni * oc + o) * od * h * w;
            T acc{};
            for (std::size_t i = 0; i < od * h * w; ++i) acc += dyo[i];
            db.data[o] += acc;
        }
}

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, const BatchNorm& spec, Tensor<T>& gamma,
                            Tensor<T>& beta, Tensor<T>& running_mean, Tensor<T>& running_var,
                            bool use_batch_stats, BatchNormCache<T>& cache) {
    if (x.shape.size() != 2 || x.shape[1] != spec.features)
        throw DimensionError("batchnorm_forward: expected [n, " + std::to_string(spec.features) +
                             "], got " + shape_str(x.shape));
    const std::size_t n = x.shape[0], f = spec.features;
    if (use_batch_stats && n < 2)
        throw BatchError("batchnorm training requires a batch of at least 2 samples");

    Tensor<T> y(x.shape);
    cache.xhat = Tensor<T>(x.shape);
    cache.inv_std.assign(f, T{0});
    cache.used_batch_stats = use_batch_stats;

    if (use_batch_stats) {
        parallel_for(f, [&](std::size_t j) {
            T mean{};
            for (std::size_t i = 0; i < n; ++i) mean += x.data[i * f + j];
            mean /= static_cast<T>(n);
            T var{};
            for (std::size_t i = 0; i < n; ++i) {
                const T dv = x.data[i * f + j] - mean;
                var += dv * dv;
            }
            var /= static_cast<T>(n);  // biased

            const T inv = T{1} / std::sqrt(var + static_cast<T>(spec.epsilon));
            cache.inv_std[j] = inv;
            for (std::size_t i = 0; i < n; ++i) {
                const T xh = (x.data[i * f + j] - mean) * inv;
                cache.xhat.data[i * f + j] = xh;
                y.data[i * f + j] = gamma.data[j] * xh + beta.data[j];
            }
            const T m = static_cast<T>(spec.momentum);
            running_mean.data[j] = m * running_mean.data[j] + (T{1} - m) * mean;
            running_var.data[j] = m * running_var.data[j] + (T{1} - m) * var;
        });
    } else {
        parallel_for(f, [&](std::size_t j) {
            const T inv = T{1} / std::sqrt(running_var.data[j] + static_cast<T>(spec.epsilon));
            cache.inv_std[j] = inv;
            for (std::size_t i = 0; i < n; ++i) {
                const T xh = (x.data[i * f + j] - running_mean.data[j]) * inv;
                cache.xhat.data[i * f + j] = xh;
                y.data[i * f + j] = gamma.data[j] * xh + beta.data[j];
            }
        });
    }
    return y;
}

template <typename T>
void batchnorm_backward(const Tensor<T>& dy, const BatchNorm& spec, const Tensor<T>& gamma,
                        const BatchNormCache<T>& cache, Tensor<T>& dx, Tensor<T>& dgamma,
                        Tensor<T>& dbeta) {
    const std::size_t n = dy.shape[0], f = spec.features;
    dx = Tensor<T>(dy.shape);
    dgamma = Tensor<T>({f});
    dbeta = Tensor<T>({f});

    parallel_for(f, [&](std::size_t j) {
        T sum_dy{}, sum_dy_xhat{};
        for (std::size_t i = 0; i < n; ++i) {
            const T d = dy.data[i * f + j];
            sum_dy += d;
            sum_dy_xhat += d * cache.xhat.data[i * f + j];
        }
        dgamma.data[j] = sum_dy_xhat;
        dbeta.data[j] = sum_dy;

        const T g = gamma.data[j];
        const T inv = cache.inv_std[j];
        if (cache.used_batch_stats) {
            // Batch statistics participated in the forward pass, so mean
            // and variance terms feed back into dx.
            const T nn = static_cast<T>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const T d = dy.data[i * f + j];
                const T xh = cache.xhat.data[i * f + j];
                dx.data[i * f + j] = g * inv / nn * (nn * d - sum_dy - xh * sum_dy_xhat);
            }
        } else {
            for (std::size_t i = 0; i < n; ++i)
                dx.data[i * f + j] = dy.data[i * f + j] * g * inv;
        }
    });
}

template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& x, double rate, bool training, Pcg32* rng,
                          Tensor<T>& mask) {
    if (rate < 0.0 || rate >= 1.0)
        throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
    if (!training || rate == 0.0) {
        mask = Tensor<T>();
        return x;
    }
    if (rng == nullptr) throw ContractError("training dropout needs a PCG32 stream");

    // Mask generation is sequential row-major; one u01 draw per element.
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    mask = Tensor<T>(x.shape);
    for (auto& m : mask.data) m = rng->next_double() < rate ? T{0} : scale;

    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] * mask.data[i];
    return y;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& dy, const Tensor<T>& mask) {
    if (mask.empty()) return dy;
    Tensor<T> dx(dy.shape);
    for (std::size_t i = 0; i < dy.size(); ++i) dx.data[i] = dy.data[i] * mask.data[i];
    return dx;
}

template <typename T>
Tensor<T> activation_forward(const Tensor<T>& x, const Activation& act) {
    if (act.kind == Act::softmax) return softmax_rows(x);
    Tensor<T> y(x.shape);
    if (act.kind == Act::relu) {
        for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] > T{0} ? x.data[i] : T{0};
    } else {
        const T a = static_cast<T>(act.alpha);
        for (std::size_t i = 0; i < x.size(); ++i)
            y.data[i] = x.data[i] > T{0} ? x.data[i] : a * x.data[i];
    }
    return y;
}

template <typename T>
Tensor<T> activation_backward(const Tensor<T>& x, const Tensor<T>& dy, const Activation& act) {
    if (act.kind == Act::softmax)
        throw ContractError("softmax backward flows through softmax_cross_entropy");
    Tensor<T> dx(dy.shape);
    if (act.kind == Act::relu) {
        for (std::size_t i = 0; i < dy.size(); ++i)
            dx.data[i] = x.data[i] > T{0} ? dy.data[i] : T{0};
    } else {
        const T a = static_cast<T>(act.alpha);
        for (std::size_t i = 0; i < dy.size(); ++i)
            dx.data[i] = x.data[i] > T{0} ? dy.data[i] : a * dy.data[i];
    }
    return dx;
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
    if (logits.shape.size() != 2)
        throw DimensionError("softmax expects [n, k], got " + shape_str(logits.shape));
    const std::size_t n = logits.shape[0], k = logits.shape[1];
    Tensor<T> probs(logits.shape);
    parallel_for(n, [&](std::size_t i) {
        const T* row = logits.ptr() + i * k;
        T* out = probs.ptr() + i * k;
        T mx = row[0];
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        T sum{};
        for (std::size_t j = 0; j < k; ++j) {
            out[j] = std::exp(row[j] - mx);
            sum += out[j];
        }
        for (std::size_t j = 0; j < k; ++j) out[j] /= sum;
    });
    return probs;
}

template <typename T>
SoftmaxXentResult<T> softmax_cross_entropy(const Tensor<T>& logits,
                                           const std::vector<std::uint16_t>& labels) {
    const std::size_t n = logits.shape[0], k = logits.shape[1];
    if (labels.size() != n) throw DimensionError("softmax_cross_entropy: label count mismatch");
    for (const auto l : labels)
        if (l >= k)
            throw LabelError("label " + std::to_string(l) + " out of range for " +
                             std::to_string(k) + " classes");

    SoftmaxXentResult<T> result;
    result.probs = softmax_rows(logits);
    result.dlogits = Tensor<T>(logits.shape);

    // Loss via log-sum-exp on the logits; immune to prob underflow.
    T loss{};
    for (std::size_t i = 0; i < n; ++i) {
        const T* row = logits.ptr() + i * k;
        T mx = row[0];
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        T sum{};
        for (std::size_t j = 0; j < k; ++j) sum += std::exp(row[j] - mx);
        loss += std::log(sum) + mx - row[labels[i]];
    }
    result.loss = loss / static_cast<T>(n);

    const T inv_n = T{1} / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const T* p = result.probs.ptr() + i * k;
        T* d = result.dlogits.ptr() + i * k;
        for (std::size_t j = 0; j < k; ++j) d[j] = p[j] * inv_n;
        d[labels[i]] -= inv_n;
    }
    return result;
}

#define HSTL_INSTANTIATE_OPS(T)                                                                  \
    template Tensor<T> dense_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);  \
    template void dense_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                    Tensor<T>&, Tensor<T>&, Tensor<T>&);                        \
    template Tensor<T> conv2d_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
    template void conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,      \
                                     Tensor<T>&, Tensor<T>&, Tensor<T>&);                       \
    template Tensor<T> conv3d_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
    template void conv3d_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,      \
                                     Tensor<T>&, Tensor<T>&, Tensor<T>&);                       \
    template Tensor<T> batchnorm_forward<T>(const Tensor<T>&, const BatchNorm&, Tensor<T>&,     \
                                            Tensor<T>&, Tensor<T>&, Tensor<T>&, bool,           \
                                            BatchNormCache<T>&);                                \
    template void batchnorm_backward<T>(const Tensor<T>&, const BatchNorm&, const Tensor<T>&,   \
                                        const BatchNormCache<T>&, Tensor<T>&, Tensor<T>&,       \
                                        Tensor<T>&);                                            \
    template Tensor<T> dropout_forward<T>(const Tensor<T>&, double, bool, Pcg32*, Tensor<T>&);  \
    template Tensor<T> dropout_backward<T>(const Tensor<T>&, const Tensor<T>&);                 \
    template Tensor<T> activation_forward<T>(const Tensor<T>&, const Activation&);              \
    template Tensor<T> activation_backward<T>(const Tensor<T>&, const Tensor<T>&,               \
                                              const Activation&);                               \
    template Tensor<T> softmax_rows<T>(const Tensor<T>&);                                       \
    template SoftmaxXentResult<T> softmax_cross_entropy<T>(const Tensor<T>&,                    \
                                                           const std::vector<std::uint16_t>&);

HSTL_INSTANTIATE_OPS(float)
HSTL_INSTANTIATE_OPS(double)
// Extended precision backs the finite-difference oracle in grad_check.
HSTL_INSTANTIATE_OPS(long double)

#undef HSTL_INSTANTIATE_OPS

}  // namespace hstl::nn
