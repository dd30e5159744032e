#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hstl/scene.hpp"

namespace hstl {

// Symmetric eigendecomposition result, eigenvalues sorted non-increasing.
// vectors is n x n row-major; column j is the eigenvector of values[j],
// sign fixed so each column's largest-magnitude entry is positive.
struct EigenDecomposition {
    std::size_t n = 0;
    std::vector<double> values;
    std::vector<double> vectors;
};

// Cyclic Jacobi on a symmetric matrix (row-major n x n). Converges when
// the off-diagonal Frobenius norm drops below 1e-10 * ||A||_F, capped at
// 100 sweeps. Deterministic: fixed sweep order, fixed sign convention.
EigenDecomposition jacobi_eigh(const std::vector<double>& matrix, std::size_t n);

// Spectral PCA fit on a scene cube: per-band means over all pixels,
// covariance with divisor N-1, top-C eigenpairs via jacobi_eigh.
struct PcaModel {
    std::size_t bands = 0;       // original band count B
    std::size_t components = 0;  // retained components C
    std::vector<double> band_means;   // length B
    std::vector<double> basis;        // B x C row-major, columns orthonormal
    std::vector<double> eigenvalues;  // length C, non-increasing
};

PcaModel fit_pca(const Cube& cube, std::size_t n_components);

// out[r][c] = basis^T * (cube[r][c] - band_means); accumulation in f64,
// result narrowed to the pipeline's f32.
Cube apply_pca(const Cube& cube, const PcaModel& pca);

// Mean + basis reconstruction of a reduced cube (test/inspection helper).
Cube reconstruct_pca(const Cube& reduced, const PcaModel& pca);

// HSPCA1 checkpoint: magic "HSPCA1", u32 LE JSON {bands, components},
// then means, eigenvalues, basis as little-endian f64 in that order.
void save_pca(const PcaModel& pca, const std::string& path);
PcaModel load_pca(const std::string& path);

}  // namespace hstl
