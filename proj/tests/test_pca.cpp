#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#ifdef HSTL_HAVE_EIGEN
#include <Eigen/Dense>
#endif

#include "hstl/pca.hpp"
#include "hstl/rng.hpp"

using namespace hstl;

namespace {

Cube random_cube(std::size_t rows, std::size_t cols, std::size_t bands, std::uint64_t seed) {
    Cube cube(rows, cols, bands);
    Pcg32 rng(seed);
    for (auto& v : cube.data) v = static_cast<float>(2.0 * rng.next_double() - 1.0);
    return cube;
}

std::vector<double> covariance_of(const Cube& cube) {
    const std::size_t B = cube.bands, N = cube.rows * cube.cols;
    std::vector<double> mean(B, 0.0);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t b = 0; b < B; ++b) mean[b] += cube.data[i * B + b];
    for (auto& m : mean) m /= static_cast<double>(N);
    std::vector<double> cov(B * B, 0.0);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t r = 0; r < B; ++r)
            for (std::size_t c = 0; c < B; ++c)
                cov[r * B + c] += (cube.data[i * B + r] - mean[r]) *
                                  (cube.data[i * B + c] - mean[c]);
    for (auto& v : cov) v /= static_cast<double>(N - 1);
    return cov;
}

}  // namespace

TEST_CASE("rank-1 two-band data: component (0.70711, 0.70711), second eigenvalue 0") {
    Cube cube(1, 5, 2);
    for (std::size_t i = 0; i < 5; ++i) {
        const float s = static_cast<float>(i) - 2.0f;
        cube.data[i * 2 + 0] = s;
        cube.data[i * 2 + 1] = s;
    }
    const PcaModel pca = fit_pca(cube, 2);
    CHECK(pca.basis[0 * 2 + 0] == doctest::Approx(0.70711).epsilon(1e-4));
    CHECK(pca.basis[1 * 2 + 0] == doctest::Approx(0.70711).epsilon(1e-4));
    CHECK(pca.eigenvalues[1] == doctest::Approx(0.0).scale(1e-9));
    CHECK(pca.eigenvalues[0] >= pca.eigenvalues[1]);
}

TEST_CASE("components are orthonormal within 1e-5") {
    const Cube cube = random_cube(6, 7, 9, 11);
    const PcaModel pca = fit_pca(cube, 5);
    for (std::size_t a = 0; a < 5; ++a)
        for (std::size_t b = 0; b < 5; ++b) {
            double dot = 0;
            for (std::size_t k = 0; k < 9; ++k)
                dot += pca.basis[k * 5 + a] * pca.basis[k * 5 + b];
            CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).scale(1.0).epsilon(1e-5));
        }
}

TEST_CASE("jacobi reproduces a hand-checkable 2x2 spectrum") {
    // [[2,1],[1,2]] has eigenvalues 3 and 1 with vectors (1,1)/sqrt2, (-1,1)/sqrt2.
    const std::vector<double> m{2, 1, 1, 2};
    const EigenDecomposition eig = jacobi_eigh(m, 2);
    CHECK(eig.values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(eig.values[1] == doctest::Approx(1.0).epsilon(1e-12));
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(eig.vectors[0 * 2 + 0] == doctest::Approx(s).epsilon(1e-12));
    CHECK(eig.vectors[1 * 2 + 0] == doctest::Approx(s).epsilon(1e-12));
    // Sign convention: largest-magnitude entry positive.
    CHECK(std::abs(eig.vectors[0 * 2 + 1]) == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("degenerate zero-variance cube yields zero eigenvalues, not an error") {
    Cube cube(3, 3, 4);
    for (auto& v : cube.data) v = 1.25f;
    const PcaModel pca = fit_pca(cube, 4);
    for (const double ev : pca.eigenvalues) CHECK(ev == doctest::Approx(0.0).scale(1e-12));
}

TEST_CASE("n_components above band count is a dimension error") {
    const Cube cube = random_cube(2, 2, 3, 1);
    CHECK_THROWS_AS(fit_pca(cube, 4), DimensionError);
}

#ifdef HSTL_HAVE_EIGEN
TEST_CASE("jacobi matches a dense reference eigensolver on random covariances") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const std::size_t B = 3 + seed % 6;  // up to 8x8
        const Cube cube = random_cube(4, 5, B, seed * 77);
        const std::vector<double> cov = covariance_of(cube);

        Eigen::MatrixXd m(B, B);
        for (std::size_t r = 0; r < B; ++r)
            for (std::size_t c = 0; c < B; ++c) m(r, c) = cov[r * B + c];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
        REQUIRE(solver.info() == Eigen::Success);

        const EigenDecomposition ours = jacobi_eigh(cov, B);
        for (std::size_t j = 0; j < B; ++j) {
            // Eigen sorts ascending; ours descending.
            const double ref_val = solver.eigenvalues()(static_cast<int>(B - 1 - j));
            CHECK(ours.values[j] == doctest::Approx(ref_val).epsilon(1e-6).scale(1.0));

            Eigen::VectorXd ref_vec = solver.eigenvectors().col(static_cast<int>(B - 1 - j));
            // Align the reference to our sign convention before comparing.
            int arg = 0;
            for (int k = 1; k < static_cast<int>(B); ++k)
                if (std::abs(ref_vec(k)) > std::abs(ref_vec(arg))) arg = k;
            if (ref_vec(arg) < 0) ref_vec = -ref_vec;
            for (std::size_t k = 0; k < B; ++k)
                CHECK(ours.vectors[k * B + j] ==
                      doctest::Approx(ref_vec(static_cast<int>(k))).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("fit_pca eigenpairs match the reference on a random 6-pixel 4-band cube") {
    const Cube cube = random_cube(2, 3, 4, 42);
    const PcaModel pca = fit_pca(cube, 4);
    const std::vector<double> cov = covariance_of(cube);

    Eigen::MatrixXd m(4, 4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) m(r, c) = cov[r * 4 + c];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    for (int j = 0; j < 4; ++j)
        CHECK(pca.eigenvalues[j] ==
              doctest::Approx(solver.eigenvalues()(3 - j)).epsilon(1e-6).scale(1.0));
}
#endif

TEST_CASE("apply_pca with identity basis and zero means is the identity") {
    const Cube cube = random_cube(3, 4, 3, 5);
    PcaModel pca;
    pca.bands = 3;
    pca.components = 3;
    pca.band_means = {0, 0, 0};
    pca.basis = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    pca.eigenvalues = {1, 1, 1};
    const Cube out = apply_pca(cube, pca);
    CHECK(out.data == cube.data);
}

TEST_CASE("projected component variances equal the eigenvalues") {
    const Cube cube = random_cube(12, 10, 6, 33);
    const PcaModel pca = fit_pca(cube, 4);
    const Cube proj = apply_pca(cube, pca);
    const std::size_t N = 120;
    for (std::size_t j = 0; j < 4; ++j) {
        double mean = 0;
        for (std::size_t i = 0; i < N; ++i) mean += proj.data[i * 4 + j];
        mean /= static_cast<double>(N);
        double var = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double d = proj.data[i * 4 + j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(N - 1);
        CHECK(var == doctest::Approx(pca.eigenvalues[j]).epsilon(1e-4));
    }
}

TEST_CASE("projected variances are non-increasing") {
    const Cube cube = random_cube(9, 9, 8, 8);
    const PcaModel pca = fit_pca(cube, 8);
    for (std::size_t j = 1; j < 8; ++j)
        CHECK(pca.eigenvalues[j] <= pca.eigenvalues[j - 1] + 1e-12);
}

TEST_CASE("reconstruction error shrinks as components grow") {
    const Cube cube = random_cube(10, 8, 7, 21);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t c = 1; c <= 7; ++c) {
        const PcaModel pca = fit_pca(cube, c);
        const Cube rec = reconstruct_pca(apply_pca(cube, pca), pca);
        double mse = 0;
        for (std::size_t i = 0; i < cube.data.size(); ++i) {
            const double d = cube.data[i] - rec.data[i];
            mse += d * d;
        }
        mse /= static_cast<double>(cube.data.size());
        CHECK(mse <= prev + 1e-9);
        prev = mse;
    }
    CHECK(prev == doctest::Approx(0.0).scale(1e-9));
}

TEST_CASE("band mismatch raises a dimension error") {
    const Cube cube = random_cube(2, 2, 5, 2);
    PcaModel pca = fit_pca(cube, 3);
    const Cube wrong = random_cube(2, 2, 4, 3);
    CHECK_THROWS_AS(apply_pca(wrong, pca), DimensionError);
}

TEST_CASE("pca checkpoint round trips bit-exactly") {
    const Cube cube = random_cube(5, 6, 7, 99);
    const PcaModel pca = fit_pca(cube, 4);
    const auto path =
        (std::filesystem::temp_directory_path() / "hstl_pca.hspca").string();
    save_pca(pca, path);
    const PcaModel r = load_pca(path);
    CHECK(r.bands == pca.bands);
    CHECK(r.components == pca.components);
    CHECK(r.band_means == pca.band_means);
    CHECK(r.eigenvalues == pca.eigenvalues);
    CHECK(r.basis == pca.basis);
    std::remove(path.c_str());
}
