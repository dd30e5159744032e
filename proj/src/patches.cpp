#include "hstl/patches.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "hstl/errors.hpp"
#include "hstl/rng.hpp"
#include "hstl/threading.hpp"

namespace hstl {

PatchSet extract_patches(const Cube& cube, const LabelMask& labels, std::size_t window) {
    if (window == 0 || window % 2 == 0)
        throw ConfigError("patch window must be odd and positive, got " + std::to_string(window));
    if (labels.rows != cube.rows || labels.cols != cube.cols)
        throw DimensionError("label mask does not match cube spatial dims");

    const std::size_t half = (window - 1) / 2;
    const std::size_t B = cube.bands;

    std::vector<std::size_t> centers;
    for (std::size_t i = 0; i < labels.data.size(); ++i)
        if (labels.data[i] != 0) centers.push_back(i);

    PatchSet out;
    out.layout = PatchLayout::cubes;
    out.window = window;
    out.bands = B;
    out.n_samples = centers.size();
    out.x.assign(centers.size() * window * window * B, 0.0f);
    out.y.resize(centers.size());

    parallel_for(centers.size(), [&](std::size_t s) {
        const std::size_t pr = centers[s] / cube.cols;
        const std::size_t pc = centers[s] % cube.cols;
        out.y[s] = static_cast<std::uint16_t>(labels.data[centers[s]] - 1);

        float* dst = out.x.data() + s * window * window * B;
        // dst is [band][row][col]; out-of-bounds neighbors stay zero.
        for (std::size_t wr = 0; wr < window; ++wr) {
            const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(pr + wr) -
                                     static_cast<std::ptrdiff_t>(half);
            if (r < 0 || r >= static_cast<std::ptrdiff_t>(cube.rows)) continue;
            for (std::size_t wc = 0; wc < window; ++wc) {
                const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(pc + wc) -
                                         static_cast<std::ptrdiff_t>(half);
                if (c < 0 || c >= static_cast<std::ptrdiff_t>(cube.cols)) continue;
                const float* px = cube.pixel(static_cast<std::size_t>(r),
                                             static_cast<std::size_t>(c));
                for (std::size_t b = 0; b < B; ++b)
                    dst[(b * window + wr) * window + wc] = px[b];
            }
        }
    });
    return out;
}

PatchSet flatten_patches(const PatchSet& patches) {
    if (patches.layout == PatchLayout::flat) return patches;

    const std::size_t W = patches.window, B = patches.bands;
    PatchSet out;
    out.layout = PatchLayout::flat;
    out.window = W;
    out.bands = B;
    out.n_samples = patches.n_samples;
    out.y = patches.y;
    out.x.resize(patches.x.size());

    // Cube storage is [band][row][col]; the flat feature order is
    // [row][col][band].
    parallel_for(patches.n_samples, [&](std::size_t s) {
        const float* src = patches.sample(s);
        float* dst = out.x.data() + s * W * W * B;
        for (std::size_t r = 0; r < W; ++r)
            for (std::size_t c = 0; c < W; ++c)
                for (std::size_t b = 0; b < B; ++b)
                    dst[(r * W + c) * B + b] = src[(b * W + r) * W + c];
    });
    return out;
}

namespace {

PatchSet gather(const PatchSet& src, const std::vector<std::size_t>& idx) {
    PatchSet out;
    out.layout = src.layout;
    out.window = src.window;
    out.bands = src.bands;
    out.n_samples = idx.size();
    const std::size_t f = src.sample_floats();
    out.x.resize(idx.size() * f);
    out.y.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        std::copy_n(src.sample(idx[i]), f, out.x.data() + i * f);
        out.y[i] = src.y[idx[i]];
    }
    return out;
}

}  // namespace

std::pair<PatchSet, PatchSet> split_train_test(const PatchSet& patches, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw ConfigError("train_fraction must lie in (0,1)");
    if (patches.n_samples < 2) throw SplitError("need at least 2 samples to split");

    Pcg32 rng(spec.seed);
    std::vector<std::size_t> train_idx, test_idx;

    if (!spec.stratified) {
        std::vector<std::size_t> idx(patches.n_samples);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        fisher_yates_shuffle(idx, rng);
        const auto n_train = static_cast<std::size_t>(
            std::floor(spec.train_fraction * static_cast<double>(patches.n_samples)));
        train_idx.assign(idx.begin(), idx.begin() + n_train);
        test_idx.assign(idx.begin() + n_train, idx.end());
    } else {
        // Classes processed in ascending id order, one shuffle each, all
        // drawing from the same seeded stream.
        std::map<std::uint16_t, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < patches.n_samples; ++i) by_class[patches.y[i]].push_back(i);
        for (auto& [cls, idx] : by_class) {
            fisher_yates_shuffle(idx, rng);
            const auto n_train = static_cast<std::size_t>(
                std::floor(spec.train_fraction * static_cast<double>(idx.size())));
            if (n_train < 1)
                throw SplitError("class " + std::to_string(cls + 1) +
                                 " has too few samples for a stratified train split");
            train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + n_train);
            test_idx.insert(test_idx.end(), idx.begin() + n_train, idx.end());
        }
    }

    return {gather(patches, train_idx), gather(patches, test_idx)};
}

}  // namespace hstl
