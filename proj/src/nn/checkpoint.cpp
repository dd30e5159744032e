#include "hstl/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "hstl/errors.hpp"

namespace hstl::nn {

namespace {

constexpr char kMagic[] = "HSCKPT1";  // 7 bytes on disk
constexpr std::size_t kMagicLen = 7;

template <typename T>
const char* dtype_tag() {
    return sizeof(T) == 4 ? "f32" : "f64";
}

nlohmann::json read_header(std::ifstream& in, const std::string& path) {
    char magic[kMagicLen];
    in.read(magic, kMagicLen);
    if (!in || std::memcmp(magic, kMagic, kMagicLen) != 0)
        throw FormatError("not an HSCKPT1 file: " + path);

    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("truncated checkpoint header: " + path);
    const std::uint32_t hlen = static_cast<std::uint32_t>(b[0]) |
                               (static_cast<std::uint32_t>(b[1]) << 8) |
                               (static_cast<std::uint32_t>(b[2]) << 16) |
                               (static_cast<std::uint32_t>(b[3]) << 24);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    if (!in) throw FormatError("truncated checkpoint header: " + path);
    try {
        return nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad checkpoint header JSON: ") + e.what());
    }
}

}  // namespace

template <typename T>
void save_checkpoint(const ModelSpec& model, const Params<T>& params, const std::string& path) {
    validate_params(model, params);

    nlohmann::json dir = nlohmann::json::array();
    std::size_t offset = 0;
    for_each_tensor<T>(model, params,
                       [&](std::size_t layer, const std::string& name, const Tensor<T>& t, bool) {
                           dir.push_back({{"name", "L" + std::to_string(layer) + "." + name},
                                          {"shape", t.shape},
                                          {"dtype", dtype_tag<T>()},
                                          {"offset", offset}});
                           offset += t.size() * sizeof(T);
                       });

    nlohmann::json header;
    header["spec"] = spec_to_json(model);
    header["tensors"] = std::move(dir);
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, kMagicLen);
    const auto len = static_cast<std::uint32_t>(hs.size());
    unsigned char b[4] = {static_cast<unsigned char>(len & 0xff),
                          static_cast<unsigned char>((len >> 8) & 0xff),
                          static_cast<unsigned char>((len >> 16) & 0xff),
                          static_cast<unsigned char>((len >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));

    for_each_tensor<T>(model, params,
                       [&](std::size_t, const std::string&, const Tensor<T>& t, bool) {
                           out.write(reinterpret_cast<const char*>(t.ptr()),
                                     static_cast<std::streamsize>(t.size() * sizeof(T)));
                       });
    if (!out) throw IoError("write failed: " + path);
}

template <typename T>
std::pair<ModelSpec, Params<T>> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);

    const nlohmann::json header = read_header(in, path);
    ModelSpec model = spec_from_json(header.at("spec"));
    infer_shapes(model);

    Params<T> params;
    params.layers.resize(model.layers.size());

    // Directory entries must match the tensor list implied by the model spec.
    const auto& dir = header.at("tensors");
    std::size_t cursor = 0;
    for (std::size_t layer = 0; layer < model.layers.size(); ++layer) {
        for (const auto& [name, shape] : layer_tensor_shapes(model.layers[layer].spec)) {
            if (cursor >= dir.size())
                throw FormatError("checkpoint directory too short: " + path);
            const auto& entry = dir.at(cursor);
            const auto want_name = "L" + std::to_string(layer) + "." + name;
            if (entry.at("name").get<std::string>() != want_name)
                throw FormatError("checkpoint tensor order mismatch: expected " + want_name);
            if (entry.at("dtype").get<std::string>() != dtype_tag<T>())
                throw FormatError("checkpoint dtype " + entry.at("dtype").get<std::string>() +
                                  " does not match requested precision");
            const auto got = entry.at("shape").get<std::vector<std::size_t>>();
            if (got != shape)
                throw FormatError("checkpoint tensor " + want_name + " has shape " +
                                  shape_str(got) + ", spec requires " + shape_str(shape));
            cursor++;

            Tensor<T> loaded(shape);
            in.read(reinterpret_cast<char*>(loaded.ptr()),
                    static_cast<std::streamsize>(loaded.size() * sizeof(T)));
            if (in.gcount() != static_cast<std::streamsize>(loaded.size() * sizeof(T)))
                throw FormatError("truncated checkpoint payload: " + path);

            auto& slot = params.layers[layer];
            if (name == "weight") slot.weight = std::move(loaded);
            else if (name == "bias") slot.bias = std::move(loaded);
            else if (name == "gamma") slot.gamma = std::move(loaded);
            else if (name == "beta") slot.beta = std::move(loaded);
            else if (name == "running_mean") slot.running_mean = std::move(loaded);
            else slot.running_var = std::move(loaded);
        }
    }
    if (cursor != dir.size()) throw FormatError("checkpoint directory too long: " + path);

    validate_params(model, params);
    return {std::move(model), std::move(params)};
}

std::string checkpoint_dtype(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    const nlohmann::json header = read_header(in, path);
    const auto& dir = header.at("tensors");
    if (dir.empty()) return "f32";
    return dir.at(0).at("dtype").get<std::string>();
}

template void save_checkpoint<float>(const ModelSpec&, const Params<float>&, const std::string&);
template void save_checkpoint<double>(const ModelSpec&, const Params<double>&, const std::string&);
template std::pair<ModelSpec, Params<float>> load_checkpoint<float>(const std::string&);
template std::pair<ModelSpec, Params<double>> load_checkpoint<double>(const std::string&);

}  // namespace hstl::nn
