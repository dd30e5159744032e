#include "hstl/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hstl/rng.hpp"

namespace hstl {

namespace {

constexpr char kMagic[4] = {'H', 'S', 'C', '1'};

void write_u32le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("truncated file: missing header length");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void validate_scene(const Scene& scene) {
    const auto r = scene.cube.rows, c = scene.cube.cols, b = scene.cube.bands;
    if (r == 0 || c == 0 || b == 0)
        throw ValidationError("scene dimensions must be positive");
    if (scene.cube.data.size() != r * c * b)
        throw ValidationError("cube payload does not match rows*cols*bands");
    if (scene.labels.rows != r || scene.labels.cols != c ||
        scene.labels.data.size() != r * c)
        throw ValidationError("label mask does not match cube spatial dims");
    for (const float v : scene.cube.data)
        if (!std::isfinite(v)) throw ValidationError("cube contains non-finite values");
    const auto k = scene.class_names.size();
    for (const std::uint16_t l : scene.labels.data)
        if (l > k)
            throw ValidationError("label " + std::to_string(l) + " exceeds class count " +
                                  std::to_string(k));
}

ClassTable class_table(const Scene& scene) {
    ClassTable table(scene.class_names.size());
    for (std::size_t k = 0; k < table.size(); ++k) table[k].name = scene.class_names[k];
    for (const std::uint16_t l : scene.labels.data)
        if (l != 0) table[l - 1].sample_count++;
    return table;
}

std::size_t labeled_pixel_count(const Scene& scene) {
    std::size_t n = 0;
    for (const std::uint16_t l : scene.labels.data) n += (l != 0);
    return n;
}

void save_scene(const Scene& scene, const std::string& path) {
    validate_scene(scene);

    nlohmann::json header;
    header["name"] = scene.name;
    header["rows"] = scene.cube.rows;
    header["cols"] = scene.cube.cols;
    header["bands"] = scene.cube.bands;
    header["class_names"] = scene.class_names;
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, 4);
    write_u32le(out, static_cast<std::uint32_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));

    static_assert(sizeof(float) == 4);
    // Little-endian host assumed; the formats are defined LE.
    out.write(reinterpret_cast<const char*>(scene.cube.data.data()),
              static_cast<std::streamsize>(scene.cube.data.size() * 4));
    out.write(reinterpret_cast<const char*>(scene.labels.data.data()),
              static_cast<std::streamsize>(scene.labels.data.size() * 2));
    if (!out) throw IoError("write failed: " + path);
}

Scene load_scene(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("not an HSC1 file: " + path);

    const std::uint32_t hlen = read_u32le(in);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    if (!in) throw FormatError("truncated header: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad scene header JSON: ") + e.what());
    }

    Scene scene;
    try {
        scene.name = header.at("name").get<std::string>();
        const auto rows = header.at("rows").get<std::size_t>();
        const auto cols = header.at("cols").get<std::size_t>();
        const auto bands = header.at("bands").get<std::size_t>();
        scene.class_names = header.at("class_names").get<std::vector<std::string>>();
        scene.cube = Cube(rows, cols, bands);
        scene.labels = LabelMask(rows, cols);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad scene header fields: ") + e.what());
    }

    in.read(reinterpret_cast<char*>(scene.cube.data.data()),
            static_cast<std::streamsize>(scene.cube.data.size() * 4));
    if (in.gcount() != static_cast<std::streamsize>(scene.cube.data.size() * 4))
        throw FormatError("truncated cube payload: " + path);
    in.read(reinterpret_cast<char*>(scene.labels.data.data()),
            static_cast<std::streamsize>(scene.labels.data.size() * 2));
    if (in.gcount() != static_cast<std::streamsize>(scene.labels.data.size() * 2))
        throw FormatError("truncated label payload: " + path);

    validate_scene(scene);
    return scene;
}

Scene generate_synthetic_scene(const SynthSpec& spec) {
    if (spec.n_classes < 2) throw ConfigError("synthetic scene needs n_classes >= 2");
    if (spec.bands < 2) throw ConfigError("synthetic scene needs bands >= 2");
    if (spec.noise_sigma < 0) throw ConfigError("noise_sigma must be nonnegative");
    if (spec.n_classes > spec.blob_count)
        throw ConfigError("n_classes " + std::to_string(spec.n_classes) +
                          " exceeds blob_count " + std::to_string(spec.blob_count) +
                          "; some class would have no pixels");

    // Blobs live in disjoint grid cells so round-robin class assignment
    // guarantees every class keeps at least one labeled pixel.
    const std::size_t grid =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(spec.blob_count))));
    if (spec.rows < grid || spec.cols < grid)
        throw ConfigError("scene too small for " + std::to_string(spec.blob_count) + " blobs");
    const std::size_t cell_h = spec.rows / grid;
    const std::size_t cell_w = spec.cols / grid;

    Scene scene;
    scene.name = "synthetic-" + std::to_string(spec.seed);
    scene.cube = Cube(spec.rows, spec.cols, spec.bands);
    scene.labels = LabelMask(spec.rows, spec.cols);
    for (std::size_t k = 1; k <= spec.n_classes; ++k)
        scene.class_names.push_back("class_" + std::to_string(k));

    Pcg32 rng(spec.seed);

    // Blob geometry first (4 draws per blob), then noise, so the stream
    // layout is stable.
    for (std::size_t blob = 0; blob < spec.blob_count; ++blob) {
        const std::size_t cell_r = (blob / grid) * cell_h;
        const std::size_t cell_c = (blob % grid) * cell_w;
        const auto h = 1 + rng.bounded(static_cast<std::uint32_t>(cell_h));
        const auto w = 1 + rng.bounded(static_cast<std::uint32_t>(cell_w));
        const auto r0 = cell_r + rng.bounded(static_cast<std::uint32_t>(cell_h - h + 1));
        const auto c0 = cell_c + rng.bounded(static_cast<std::uint32_t>(cell_w - w + 1));
        const auto cls = static_cast<std::uint16_t>(blob % spec.n_classes + 1);
        for (std::size_t r = r0; r < r0 + h; ++r)
            for (std::size_t c = c0; c < c0 + w; ++c)
                scene.labels.at(r, c) = cls;
    }

    // Mean spectra: background is flat 0.1; class k adds a Gaussian bump
    // centered at (k-0.5)/K of the band axis.
    std::vector<std::vector<double>> means(spec.n_classes + 1,
                                           std::vector<double>(spec.bands, 0.1));
    const double width =
        std::max(1.0, static_cast<double>(spec.bands) / (2.0 * static_cast<double>(spec.n_classes)));
    for (std::size_t k = 1; k <= spec.n_classes; ++k) {
        const double center = (static_cast<double>(k) - 0.5) /
                              static_cast<double>(spec.n_classes) *
                              static_cast<double>(spec.bands - 1);
        for (std::size_t b = 0; b < spec.bands; ++b) {
            const double d = (static_cast<double>(b) - center) / width;
            means[k][b] += std::exp(-0.5 * d * d);
        }
    }

    for (std::size_t r = 0; r < spec.rows; ++r)
        for (std::size_t c = 0; c < spec.cols; ++c) {
            const auto& mu = means[scene.labels.at(r, c)];
            for (std::size_t b = 0; b < spec.bands; ++b) {
                double v = mu[b];
                if (spec.noise_sigma > 0) v += spec.noise_sigma * rng.next_normal();
                scene.cube.at(r, c, b) = static_cast<float>(v);
            }
        }

    return scene;
}

std::array<std::uint8_t, 3> palette_color(std::size_t class_index) {
    if (class_index == 0) return {0, 0, 0};
    const double hue = std::fmod(static_cast<double>(class_index - 1) * 137.508, 360.0);
    const double hp = hue / 60.0;
    const int sextant = static_cast<int>(hp);  // hue < 360 so sextant in 0..5
    const double f = hp - sextant;
    const double v = 1.0, p = 0.0, q = 1.0 - f, t = f;
    double rgb[3];
    switch (sextant) {
        case 0: rgb[0] = v; rgb[1] = t; rgb[2] = p; break;
        case 1: rgb[0] = q; rgb[1] = v; rgb[2] = p; break;
        case 2: rgb[0] = p; rgb[1] = v; rgb[2] = t; break;
        case 3: rgb[0] = p; rgb[1] = q; rgb[2] = v; break;
        case 4: rgb[0] = t; rgb[1] = p; rgb[2] = v; break;
        default: rgb[0] = v; rgb[1] = p; rgb[2] = q; break;
    }
    std::array<std::uint8_t, 3> out{};
    for (int i = 0; i < 3; ++i)
        out[i] = static_cast<std::uint8_t>(std::floor(rgb[i] * 255.0 + 0.5));
    return out;
}

std::vector<std::uint8_t> render_class_map(const LabelMask& labels) {
    std::ostringstream header;
    header << "P6\n" << labels.cols << " " << labels.rows << "\n255\n";
    const std::string hs = header.str();

    std::vector<std::uint8_t> out(hs.begin(), hs.end());
    out.reserve(hs.size() + labels.data.size() * 3);
    for (const std::uint16_t l : labels.data) {
        const auto rgb = palette_color(l);
        out.push_back(rgb[0]);
        out.push_back(rgb[1]);
        out.push_back(rgb[2]);
    }
    return out;
}

void write_class_map(const LabelMask& labels, const std::string& path) {
    const auto bytes = render_class_map(labels);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace hstl
