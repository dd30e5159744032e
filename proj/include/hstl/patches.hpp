#pragma once

#include <cstdint>
#include <vector>

#include "hstl/scene.hpp"

namespace hstl {

enum class PatchLayout { cubes, flat };

// Labeled sample batch. Layout cubes: x is [sample][channel=1][band][row][col];
// layout flat: x is [sample][feature] with feature order [row][col][band].
// Labels are re-indexed 0..K-1 internally (class id minus one).
struct PatchSet {
    PatchLayout layout = PatchLayout::cubes;
    std::size_t window = 1;
    std::size_t bands = 0;
    std::size_t n_samples = 0;
    std::vector<float> x;
    std::vector<std::uint16_t> y;

    std::size_t sample_floats() const { return window * window * bands; }
    const float* sample(std::size_t i) const { return x.data() + i * sample_floats(); }
};

struct SplitSpec {
    double train_fraction = 0.7;
    std::uint64_t seed = 42;
    bool stratified = false;
};

// One sample per nonzero-labeled pixel, row-major scan order. The cube is
// zero-padded by (window-1)/2 per spatial side; each sample is the
// window x window x bands neighborhood stored band-major ([band][row][col])
// to feed the channel-first conv stack.
PatchSet extract_patches(const Cube& cube, const LabelMask& labels, std::size_t window);

// Cube samples rewritten as flat [row][col][band] feature vectors.
// Flat input is returned unchanged.
PatchSet flatten_patches(const PatchSet& patches);

// Fisher-Yates (PCG32-seeded) shuffle, train takes floor(fraction * N);
// stratified mode applies the same rule within each class.
std::pair<PatchSet, PatchSet> split_train_test(const PatchSet& patches, const SplitSpec& spec);

}  // namespace hstl
