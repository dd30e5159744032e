#include "hstl/pca.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "hstl/errors.hpp"
#include "hstl/threading.hpp"

namespace hstl {

namespace {

double frobenius(const std::vector<double>& a) {
    double s = 0;
    for (const double v : a) s += v * v;
    return std::sqrt(s);
}

double off_diagonal_frobenius(const std::vector<double>& a, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) s += a[i * n + j] * a[i * n + j];
    return std::sqrt(s);
}

}  // namespace

EigenDecomposition jacobi_eigh(const std::vector<double>& matrix, std::size_t n) {
    if (matrix.size() != n * n) throw DimensionError("jacobi_eigh: matrix is not n x n");

    std::vector<double> a = matrix;
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

    const double stop = 1e-10 * frobenius(a);
    constexpr int kMaxSweeps = 100;

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        if (off_diagonal_frobenius(a, n) <= stop) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];

                // Rotation angle zeroing a[p][q] (stable t computation).
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k];
                    const double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k * n + p];
                    const double vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    // Sort eigenpairs non-increasing; stable so equal eigenvalues keep
    // their sweep order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return a[x * n + x] > a[y * n + y];
    });

    EigenDecomposition out;
    out.n = n;
    out.values.resize(n);
    out.vectors.assign(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.values[j] = a[src * n + src];

        // Sign convention: largest-magnitude entry positive (first such
        // entry wins on ties).
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double m = std::abs(v[k * n + src]);
            if (m > best) {
                best = m;
                arg = k;
            }
        }
        const double flip = v[arg * n + src] < 0.0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n; ++k) out.vectors[k * n + j] = flip * v[k * n + src];
    }
    return out;
}

PcaModel fit_pca(const Cube& cube, std::size_t n_components) {
    const std::size_t B = cube.bands;
    const std::size_t N = cube.rows * cube.cols;
    if (n_components > B)
        throw DimensionError("n_components " + std::to_string(n_components) +
                             " exceeds band count " + std::to_string(B));
    if (N < 2) throw DimensionError("fit_pca needs at least 2 pixels");
    for (const float x : cube.data)
        if (!std::isfinite(x)) throw ValidationError("fit_pca: cube contains non-finite values");

    PcaModel model;
    model.bands = B;
    model.components = n_components;
    model.band_means.assign(B, 0.0);

    for (std::size_t i = 0; i < N; ++i) {
        const float* px = cube.data.data() + i * B;
        for (std::size_t b = 0; b < B; ++b) model.band_means[b] += px[b];
    }
    for (std::size_t b = 0; b < B; ++b) model.band_means[b] /= static_cast<double>(N);

    std::vector<double> cov(B * B, 0.0);
    std::vector<double> centered(B);
    for (std::size_t i = 0; i < N; ++i) {
        const float* px = cube.data.data() + i * B;
        for (std::size_t b = 0; b < B; ++b) centered[b] = px[b] - model.band_means[b];
        for (std::size_t r = 0; r < B; ++r) {
            const double cr = centered[r];
            for (std::size_t c = r; c < B; ++c) cov[r * B + c] += cr * centered[c];
        }
    }
    const double scale = 1.0 / static_cast<double>(N - 1);
    for (std::size_t r = 0; r < B; ++r)
        for (std::size_t c = r; c < B; ++c) {
            cov[r * B + c] *= scale;
            cov[c * B + r] = cov[r * B + c];
        }

    const EigenDecomposition eig = jacobi_eigh(cov, B);
    model.eigenvalues.assign(eig.values.begin(), eig.values.begin() + n_components);
    model.basis.resize(B * n_components);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t j = 0; j < n_components; ++j)
            model.basis[b * n_components + j] = eig.vectors[b * B + j];
    return model;
}

Cube apply_pca(const Cube& cube, const PcaModel& pca) {
    if (cube.bands != pca.bands)
        throw DimensionError("apply_pca: cube has " + std::to_string(cube.bands) +
                             " bands, model expects " + std::to_string(pca.bands));
    const std::size_t B = pca.bands, C = pca.components;
    Cube out(cube.rows, cube.cols, C);
    parallel_for(cube.rows * cube.cols, [&](std::size_t i) {
        const float* px = cube.data.data() + i * B;
        float* dst = out.data.data() + i * C;
        for (std::size_t j = 0; j < C; ++j) {
            double acc = 0.0;
            for (std::size_t b = 0; b < B; ++b)
                acc += pca.basis[b * C + j] * (px[b] - pca.band_means[b]);
            dst[j] = static_cast<float>(acc);
        }
    });
    return out;
}

Cube reconstruct_pca(const Cube& reduced, const PcaModel& pca) {
    if (reduced.bands != pca.components)
        throw DimensionError("reconstruct_pca: component count mismatch");
    const std::size_t B = pca.bands, C = pca.components;
    Cube out(reduced.rows, reduced.cols, B);
    parallel_for(reduced.rows * reduced.cols, [&](std::size_t i) {
        const float* y = reduced.data.data() + i * C;
        float* dst = out.data.data() + i * B;
        for (std::size_t b = 0; b < B; ++b) {
            double acc = pca.band_means[b];
            for (std::size_t j = 0; j < C; ++j) acc += pca.basis[b * C + j] * y[j];
            dst[b] = static_cast<float>(acc);
        }
    });
    return out;
}

void save_pca(const PcaModel& pca, const std::string& path) {
    nlohmann::json header;
    header["bands"] = pca.bands;
    header["components"] = pca.components;
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write("HSPCA1", 6);
    const auto len = static_cast<std::uint32_t>(hs.size());
    unsigned char b[4] = {static_cast<unsigned char>(len & 0xff),
                          static_cast<unsigned char>((len >> 8) & 0xff),
                          static_cast<unsigned char>((len >> 16) & 0xff),
                          static_cast<unsigned char>((len >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    out.write(reinterpret_cast<const char*>(pca.band_means.data()),
              static_cast<std::streamsize>(pca.band_means.size() * 8));
    out.write(reinterpret_cast<const char*>(pca.eigenvalues.data()),
              static_cast<std::streamsize>(pca.eigenvalues.size() * 8));
    out.write(reinterpret_cast<const char*>(pca.basis.data()),
              static_cast<std::streamsize>(pca.basis.size() * 8));
    if (!out) throw IoError("write failed: " + path);
}

PcaModel load_pca(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);

    char magic[6];
    in.read(magic, 6);
    if (!in || std::memcmp(magic, "HSPCA1", 6) != 0)
        throw FormatError("not an HSPCA1 file: " + path);

    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("truncated PCA header: " + path);
    const std::uint32_t hlen = static_cast<std::uint32_t>(b[0]) |
                               (static_cast<std::uint32_t>(b[1]) << 8) |
                               (static_cast<std::uint32_t>(b[2]) << 16) |
                               (static_cast<std::uint32_t>(b[3]) << 24);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    if (!in) throw FormatError("truncated PCA header: " + path);

    PcaModel pca;
    try {
        const auto header = nlohmann::json::parse(hs);
        pca.bands = header.at("bands").get<std::size_t>();
        pca.components = header.at("components").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad PCA header: ") + e.what());
    }
    if (pca.components > pca.bands) throw FormatError("PCA header: components > bands");

    pca.band_means.resize(pca.bands);
    pca.eigenvalues.resize(pca.components);
    pca.basis.resize(pca.bands * pca.components);
    in.read(reinterpret_cast<char*>(pca.band_means.data()),
            static_cast<std::streamsize>(pca.band_means.size() * 8));
    in.read(reinterpret_cast<char*>(pca.eigenvalues.data()),
            static_cast<std::streamsize>(pca.eigenvalues.size() * 8));
    in.read(reinterpret_cast<char*>(pca.basis.data()),
            static_cast<std::streamsize>(pca.basis.size() * 8));
    if (!in) throw FormatError("truncated PCA payload: " + path);
    return pca;
}

}  // namespace hstl
