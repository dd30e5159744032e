#pragma once

// Test-only reference implementations, written as straight nested loops
// independent of the library code paths they check. Accumulation orders
// mirror the documented op contracts so f64 comparisons can be exact.

#include <cstdint>
#include <vector>

#include "hstl/rng.hpp"
#include "hstl/tensor.hpp"

namespace oracle {

using hstl::Tensor;

inline Tensor<double> random_tensor(std::vector<std::size_t> shape, hstl::Pcg32& rng,
                                    double scale = 1.0) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.data) v = scale * (2.0 * rng.next_double() - 1.0);
    return t;
}

inline Tensor<double> matmul_bias(const Tensor<double>& x, const Tensor<double>& w,
                                  const Tensor<double>& b) {
    const std::size_t n = x.shape[0], in = x.shape[1], out = w.shape[1];
    Tensor<double> y({n, out});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < out; ++j) {
            double acc = b.data[j];
            for (std::size_t k = 0; k < in; ++k) acc += x.data[i * in + k] * w.data[k * out + j];
            y.data[i * out + j] = acc;
        }
    return y;
}

inline void matmul_bias_grads(const Tensor<double>& x, const Tensor<double>& w,
                              const Tensor<double>& dy, Tensor<double>& dx, Tensor<double>& dw,
                              Tensor<double>& db) {
    const std::size_t n = x.shape[0], in = x.shape[1], out = w.shape[1];
    dx = Tensor<double>({n, in});
    dw = Tensor<double>({in, out});
    db = Tensor<double>({out});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < in; ++k) {
            double acc = 0;
            for (std::size_t j = 0; j < out; ++j)
                acc += dy.data[i * out + j] * w.data[k * out + j];
            dx.data[i * in + k] = acc;
        }
    for (std::size_t k = 0; k < in; ++k)
        for (std::size_t j = 0; j < out; ++j) {
            double acc = 0;
            for (std::size_t i = 0; i < n; ++i)
                acc += x.data[i * in + k] * dy.data[i * out + j];
            dw.data[k * out + j] = acc;
        }
    for (std::size_t j = 0; j < out; ++j) {
        double acc = 0;
        for (std::size_t i = 0; i < n; ++i) acc += dy.data[i * out + j];
        db.data[j] = acc;
    }
}

// Cross-correlation, stride 1, zero padding 1, 3x3 taps.
inline Tensor<double> conv2d(const Tensor<double>& x, const Tensor<double>& k,
                             const Tensor<double>& b) {
    const std::size_t n = x.shape[0], ic = x.shape[1], h = x.shape[2], w = x.shape[3];
    const std::size_t oc = k.shape[0];
    Tensor<double> y({n, oc, h, w});
    for (std::size_t ni = 0; ni < n; ++ni)
        for (std::size_t o = 0; o < oc; ++o)
            for (std::size_t i = 0; i < h; ++i)
                for (std::size_t j = 0; j < w; ++j) {
                    double acc = b.data[o];
                    for (std::size_t c = 0; c < ic; ++c)
                        for (std::size_t u = 0; u < 3; ++u)
                            for (std::size_t v = 0; v < 3; ++v) {
                                const long r = static_cast<long>(i + u) - 1;
                                const long s = static_cast<long>(j + v) - 1;
                                if (r < 0 || r >= static_cast<long>(h) || s < 0 ||
                                    s >= static_cast<long>(w))
                                    continue;
                                acc += x.data[((ni * ic + c) * h + r) * w + s] *
                                       k.data[((o * ic + c) * 3 + u) * 3 + v];
                            }
                    y.data[((ni * oc + o) * h + i) * w + j] = acc;
                }
    return y;
}

inline void conv2d_grads(const Tensor<double>& x, const Tensor<double>& k,
                         const Tensor<double>& dy, Tensor<double>& dx, Tensor<double>& dk,
                         Tensor<double>& db) {
    const std::size_t n = x.shape[0], ic = x.shape[1], h = x.shape[2], w = x.shape[3];
    const std::size_t oc = k.shape[0];
    dx = Tensor<double>(x.shape);
    dk = Tensor<double>(k.shape);
    db = Tensor<double>({oc});
    for (std::size_t ni = 0; ni < n; ++ni)
        for (std::size_t c = 0; c < ic; ++c)
            for (std::size_t p = 0; p < h; ++p)
                for (std::size_t q = 0; q < w; ++q) {
                    double acc = 0;
                    for (std::size_t o = 0; o < oc; ++o)
                        for (std::size_t u = 0; u < 3; ++u)
                            for (std::size_t v = 0; v < 3; ++v) {
                                const long i = static_cast<long>(p) - (static_cast<long>(u) - 1);
                                const long j = static_cast<long>(q) - (static_cast<long>(v) - 1);
                                if (i < 0 || i >= static_cast<long>(h) || j < 0 ||
                                    j >= static_cast<long>(w))
                                    continue;
                                acc += dy.data[((ni * oc + o) * h + i) * w + j] *
                                       k.data[((o * ic + c) * 3 + u) * 3 + v];
                            }
                    dx.data[((ni * ic + c) * h + p) * w + q] = acc;
                }
    for (std::size_t o = 0; o < oc; ++o)
        for (std::size_t c = 0; c < ic; ++c)
            for (std::size_t u = 0; u < 3; ++u)
                for (std::size_t v = 0; v < 3; ++v) {
                    double acc = 0;
                    for (std::size_t ni = 0; ni < n; ++ni)
                        for (std::size_t i = 0; i < h; ++i)
                            for (std::size_t j = 0; j < w; ++j) {
                                const long r = static_cast<long>(i + u) - 1;
                                const long s = static_cast<long>(j + v) - 1;
                                if (r < 0 || r >= static_cast<long>(h) || s < 0 ||
                                    s >= static_cast<long>(w))
                                    continue;
                                acc += x.data[((ni * ic + c) * h + r) * w + s] *
                                       dy.data[((ni * oc + o) * h + i) * w + j];
                            }
                    dk.data[((o * ic + c) * 3 + u) * 3 + v] = acc;
                }
    for (std::size_t o = 0; o < oc; ++o) {
        double acc = 0;
        for (std::size_t ni = 0; ni < n; ++ni)
            for (std::size_t i = 0; i < h * w; ++i)
                acc += dy.data[(ni * oc + o) * h * w + i];
        db.data[o] = acc;
    }
}

// Spectral axis valid, spatial axes "same".
inline Tensor<double> conv3d(const Tensor<double>& x, const Tensor<double>& k,
                             const Tensor<double>& b) {
    const std::size_t n = x.shape[0], ic = x.shape[1], d = x.shape[2], h = x.shape[3],
                      w = x.shape[4];
    const std::size_t oc = k.shape[0], kd = k.shape[2];
    const std::size_t od = d - kd + 1;
    Tensor<double> y({n, oc, od, h, w});
    for (std::size_t ni = 0; ni < n; ++ni)
        for (std::size_t o = 0; o < oc; ++o)
            for (std::size_t e = 0; e < od; ++e)
                for (std::size_t i = 0; i < h; ++i)
                    for (std::size_t j = 0; j < w; ++j) {
                        double acc = b.data[o];
                        for (std::size_t c = 0; c < ic; ++c)
                            for (std::size_t f = 0; f < kd; ++f)
                                for (std::size_t u = 0; u < 3; ++u)
                                    for (std::size_t v = 0; v < 3; ++v) {
                                        const long r =
                                            static_cast<long>(i + u) - 1;
                                        const long s =
                                            static_cast<long>(j + v) - 1;
                                        if (r < 0 || r >= static_cast<long>(h) || s < 0 ||
                                            s >= static_cast<long>(w))
                                            continue;
                                        acc += x.data[(((ni * ic + c) * d + e + f) * h + r) * w +
                                                      s] *
                                               k.data[(((o * ic + c) * kd + f) * 3 + u) * 3 + v];
                                    }
                        y.data[(((ni * oc + o) * od + e) * h + i) * w + j] = acc;
                    }
    return y;
}

inline void conv3d_grads(const Tensor<double>& x, const Tensor<double>& k,
                         const Tensor<double>& dy, Tensor<double>& dx, Tensor<double>& dk,
                         Tensor<double>& db) {
    const std::size_t n = x.shape[0], ic = x.shape[1], d = x.shape[2], h = x.shape[3],
                      w = x.shape[4];
    const std::size_t oc = k.shape[0], kd = k.shape[2];
    const std::size_t od = d - kd + 1;
    dx = Tensor<double>(x.shape);
    dk = Tensor<double>(k.shape);
    db = Tensor<double>({oc});
    for (std::size_t ni = 0; ni < n; ++ni)
        for (std::size_t c = 0; c < ic; ++c)
            for (std::size_t e = 0; e < d; ++e)
                for (std::size_t p = 0; p < h; ++p)
                    for (std::size_t q = 0; q < w; ++q) {
                        double acc = 0;
                        for (std::size_t o = 0; o < oc; ++o)
                            for (std::size_t f = 0; f < kd; ++f) {
                                const long de = static_cast<long>(e) - static_cast<long>(f);
                                if (de < 0 || de >= static_cast<long>(od)) continue;
                                for (std::size_t u = 0; u < 3; ++u)
                                    for (std::size_t v = 0; v < 3; ++v) {
                                        const long i =
                                            static_cast<long>(p) - (static_cast<long>(u) - 1);
                                        const long j =
                                            static_cast<long>(q) - (static_cast<long>(v) - 1);
                                        if (i < 0 || i >= static_cast<long>(h) || j < 0 ||
                                            j >= static_cast<long>(w))
                                            continue;
                                        acc +=
                                            dy.data[(((ni * oc + o) * od + de) * h + i) * w + j] *
                                            k.data[(((o * ic + c) * kd + f) * 3 + u) * 3 + v];
                                    }
                            }
                        dx.data[(((ni * ic + c) * d + e) * h + p) * w + q] = acc;
                    }
    for (std::size_t o = 0; o < oc; ++o)
        for (std::size_t c = 0; c < ic; ++c)
            for (std::size_t f = 0; f < kd; ++f)
                for (std::size_t u = 0; u < 3; ++u)
                    for (std::size_t v = 0; v < 3; ++v) {
                        double acc = 0;
                        for (std::size_t ni = 0; ni < n; ++ni)
                            for (std::size_t e = 0; e < od; ++e)
                                for (std::size_t i = 0; i < h; ++i) {
                                    const long r = static_cast<long>(i + u) - 1;
                                    if (r < 0 || r >= static_cast<long>(h)) continue;
                                    for (std::size_t j = 0; j < w; ++j) {
                                        const long s = static_cast<long>(j + v) - 1;
                                        if (s < 0 || s >= static_cast<long>(w)) continue;
                                        acc += x.data[(((ni * ic + c) * d + e + f) * h + r) * w +
                                                      s] *
                                               dy.data[(((ni * oc + o) * od + e) * h + i) * w +
                                                       j];
                                    }
                                }
                        dk.data[(((o * ic + c) * kd + f) * 3 + u) * 3 + v] = acc;
                    }
    for (std::size_t o = 0; o < oc; ++o) {
        double acc = 0;
        for (std::size_t ni = 0; ni < n; ++ni)
            for (std::size_t i = 0; i < od * h * w; ++i)
                acc += dy.data[(ni * oc + o) * od * h * w + i];
        db.data[o] = acc;
    }
}

}  // namespace oracle
