#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hstl/errors.hpp"

namespace hstl {

// Rank-3 float cube, row-major [row][col][band].
struct Cube {
    std::size_t rows = 0, cols = 0, bands = 0;
    std::vector<float> data;

    Cube() = default;
    Cube(std::size_t r, std::size_t c, std::size_t b)
        : rows(r), cols(c), bands(b), data(r * c * b, 0.0f) {}

    float& at(std::size_t r, std::size_t c, std::size_t b) {
        return data[(r * cols + c) * bands + b];
    }
    float at(std::size_t r, std::size_t c, std::size_t b) const {
        return data[(r * cols + c) * bands + b];
    }
    const float* pixel(std::size_t r, std::size_t c) const {
        return data.data() + (r * cols + c) * bands;
    }
};

// Rank-2 class-id mask, row-major; 0 means unlabeled.
struct LabelMask {
    std::size_t rows = 0, cols = 0;
    std::vector<std::uint16_t> data;

    LabelMask() = default;
    LabelMask(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0) {}

    std::uint16_t& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    std::uint16_t at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// A hyperspectral scene: reflectance cube + ground-truth mask + class names.
// Class ids are 1..K; class_names[k-1] names class k.
struct Scene {
    std::string name;
    Cube cube;
    LabelMask labels;
    std::vector<std::string> class_names;

    std::size_t rows() const { return cube.rows; }
    std::size_t cols() const { return cube.cols; }
    std::size_t bands() const { return cube.bands; }
    std::size_t n_classes() const { return class_names.size(); }
};

struct ClassCount {
    std::string name;
    std::size_t sample_count = 0;
};
using ClassTable = std::vector<ClassCount>;

struct SynthSpec {
    std::size_t rows = 32, cols = 32, bands = 16;
    std::size_t n_classes = 4;
    std::size_t blob_count = 8;
    double noise_sigma = 0.05;
    std::uint64_t seed = 42;
};

// Throws ValidationError if any Scene invariant is broken (dimension
// consistency, finite cube, labels within class count).
void validate_scene(const Scene& scene);

// Per-class labeled-pixel census, index 0 = class 1.
ClassTable class_table(const Scene& scene);
std::size_t labeled_pixel_count(const Scene& scene);

// HSC1 container. Magic "HSC1", u32 LE JSON header length, JSON
// {"bands","class_names","cols","name","rows"}, then rows*cols*bands f32 LE
// in [row][col][band] order, then rows*cols u16 LE labels in [row][col] order.
void save_scene(const Scene& scene, const std::string& path);
Scene load_scene(const std::string& path);

// Deterministic desk-scale scene: one Gaussian-bump mean spectrum per class
// (bump centers spread evenly over the band axis), blob_count axis-aligned
// rectangles assigned round-robin to classes, i.i.d. normal pixel noise.
Scene generate_synthetic_scene(const SynthSpec& spec);

// Class palette: 0 -> black; c >= 1 -> hue (c-1)*137.508 deg at full
// saturation/value through the HSV hexcone, rounded half-up to bytes.
std::array<std::uint8_t, 3> palette_color(std::size_t class_index);

// Binary PPM (P6, maxval 255), one palette pixel per label.
void write_class_map(const LabelMask& labels, const std::string& path);
std::vector<std::uint8_t> render_class_map(const LabelMask& labels);

}  // namespace hstl
