#include "hstl/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "hstl/digest.hpp"
#include "hstl/nn/checkpoint.hpp"

namespace hstl {

using namespace nn;

nlohmann::json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad config JSON in " + path + ": " + e.what());
    }
}

void apply_override(nlohmann::json& config, const std::string& dotted_key,
                    const std::string& value) {
    nlohmann::json* node = &config;
    std::size_t start = 0;
    for (;;) {
        const std::size_t dot = dotted_key.find('.', start);
        const std::string key = dotted_key.substr(start, dot - start);
        if (key.empty()) throw ConfigError("bad override key: " + dotted_key);
        if (dot == std::string::npos) {
            nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
            (*node)[key] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

namespace {

nlohmann::json section(const nlohmann::json& config, const std::string& name) {
    return config.contains(name) ? config.at(name) : nlohmann::json::object();
}

template <typename T>
T field(const nlohmann::json& sec, const std::string& key, T fallback) {
    try {
        return sec.contains(key) ? sec.at(key).get<T>() : fallback;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad config value for '" + key + "': " + e.what());
    }
}

std::string require_str(const nlohmann::json& sec, const std::string& key,
                        const std::string& where) {
    if (!sec.contains(key)) throw ConfigError("config is missing " + where + "." + key);
    return sec.at(key).get<std::string>();
}

struct PreparedData {
    Scene scene;
    PcaModel pca;
    PatchSet train;
    PatchSet test;
    std::size_t window = 0;
    std::uint64_t split_seed = 42;
};

// Shared front half of train/transfer: scene -> PCA -> patches -> split.
PreparedData prepare_data(const nlohmann::json& config, bool flat_input, std::ostream* log) {
    const auto scene_cfg = section(config, "scene");
    const auto pca_cfg = section(config, "pca");
    const auto patch_cfg = section(config, "patches");

    PreparedData data;
    data.scene = load_scene(require_str(scene_cfg, "path", "scene"));
    if (log)
        *log << "scene '" << data.scene.name << "': " << data.scene.rows() << "x"
             << data.scene.cols() << "x" << data.scene.bands() << ", "
             << data.scene.n_classes() << " classes, " << labeled_pixel_count(data.scene)
             << " labeled pixels\n";

    const auto components = field<std::size_t>(pca_cfg, "components", 30);
    data.pca = fit_pca(data.scene.cube, components);
    const Cube reduced = apply_pca(data.scene.cube, data.pca);

    data.window = field<std::size_t>(patch_cfg, "window", 5);
    PatchSet patches = extract_patches(reduced, data.scene.labels, data.window);
    if (flat_input) patches = flatten_patches(patches);

    SplitSpec split;
    split.train_fraction = field<double>(patch_cfg, "train_fraction", 0.7);
    split.seed = field<std::uint64_t>(patch_cfg, "seed", 42);
    split.stratified = field<bool>(patch_cfg, "stratified", false);
    data.split_seed = split.seed;
    auto [train_set, test_set] = split_train_test(patches, split);
    data.train = std::move(train_set);
    data.test = std::move(test_set);
    if (log)
        *log << "patches: window " << data.window << ", " << components << " components, "
             << data.train.n_samples << " train / " << data.test.n_samples << " test\n";
    return data;
}

TrainConfig train_config(const nlohmann::json& config) {
    const auto train_cfg = section(config, "train");
    TrainConfig cfg;
    cfg.epochs = field<std::size_t>(train_cfg, "epochs", 20);
    cfg.batch_size = field<std::size_t>(train_cfg, "batch_size", 128);
    cfg.seed = field<std::uint64_t>(train_cfg, "seed", 42);
    cfg.adam.lr = field<double>(train_cfg, "lr", 1e-3);
    cfg.log_every = field<std::size_t>(train_cfg, "log_every", 0);
    return cfg;
}

RunOutcome finish_run(const nlohmann::json& config, const ModelSpec& spec, Params<float>& params,
                      PreparedData& data, const TrainConfig& cfg, std::uint64_t model_seed,
                      std::ostream* log) {
    const auto outputs = section(config, "outputs");

    Metrics metrics = evaluate(spec, params, data.test);
    if (log)
        *log << "test oa " << metrics.overall_accuracy << ", aa " << metrics.average_accuracy
             << ", loss " << metrics.loss << "\n"
             << metrics_table(metrics, data.scene.class_names);

    RunOutcome outcome;
    outcome.metrics = metrics;
    outcome.spec = spec;

    nlohmann::json report = metrics_to_json(metrics);
    report["seeds"] = {{"model", model_seed}, {"split", data.split_seed}, {"train", cfg.seed}};
    outcome.metrics_json = report.dump(2) + "\n";

    if (outputs.contains("metrics")) {
        const auto path = outputs.at("metrics").get<std::string>();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + path);
        out << outcome.metrics_json;
    }
    if (outputs.contains("checkpoint")) {
        outcome.checkpoint_path = outputs.at("checkpoint").get<std::string>();
        save_checkpoint(spec, params, outcome.checkpoint_path);
    }
    const auto pca_cfg = section(config, "pca");
    if (pca_cfg.contains("checkpoint")) {
        outcome.pca_path = pca_cfg.at("checkpoint").get<std::string>();
        save_pca(data.pca, outcome.pca_path);
    }
    if (outputs.contains("map")) {
        const LabelMask map =
            predict_map(spec, params, data.scene, data.pca, data.window, true);
        write_class_map(map, outputs.at("map").get<std::string>());
    }
    return outcome;
}

}  // namespace

std::uint64_t frozen_trunk_digest(const ModelSpec& model, const Params<float>& params) {
    std::uint64_t h = 14695981039346656037ULL;
    for_each_tensor<float>(model, params,
                           [&](std::size_t layer, const std::string&, const Tensor<float>& t,
                               bool) {
                               if (model.layers[layer].trainable) return;
                               h = fnv1a64(t.ptr(), t.size() * sizeof(float), h);
                           });
    return h;
}

std::size_t derive_window(const ModelSpec& model, std::size_t components) {
    if (model.input_shape.size() == 4) return model.input_shape[2];
    const std::size_t f = model.input_shape[0];
    if (components == 0 || f % components != 0)
        throw DimensionError("cannot derive window: input " + std::to_string(f) +
                             " is not a multiple of " + std::to_string(components) +
                             " components");
    const auto w = static_cast<std::size_t>(std::llround(
        std::sqrt(static_cast<double>(f / components))));
    if (w * w * components != f)
        throw DimensionError("cannot derive window from input " + std::to_string(f));
    return w;
}

RunOutcome run_train(const nlohmann::json& config, std::ostream* log) {
    const auto model_cfg = section(config, "model");
    const Variant variant = variant_from_name(require_str(model_cfg, "variant", "model"));
    const bool flat = variant != Variant::cnn;

    PreparedData data = prepare_data(config, flat, log);

    ModelVariant mv;
    mv.kind = variant;
    mv.window = data.window;
    mv.pca_components = data.pca.components;
    mv.n_classes = data.scene.n_classes();
    const ModelSpec spec = build_model(mv);

    const auto model_seed = field<std::uint64_t>(model_cfg, "seed", 42);
    Params<float> params = init_params<float>(spec, model_seed);
    const auto counts = count_params(spec);
    if (log)
        *log << variant_name(variant) << ": " << counts.trainable << " trainable params\n";

    const TrainConfig cfg = train_config(config);
    train(spec, params, data.train, cfg, log);
    return finish_run(config, spec, params, data, cfg, model_seed, log);
}

RunOutcome run_transfer(const nlohmann::json& config, std::ostream* log) {
    const auto model_cfg = section(config, "model");
    const auto checkpoint_path = require_str(model_cfg, "checkpoint", "model");
    if (!model_cfg.contains("surgery"))
        throw ConfigError("transfer config needs a model.surgery section");
    const auto surgery_cfg = model_cfg.at("surgery");

    auto [trained_spec, trained_params] = load_checkpoint<float>(checkpoint_path);
    const bool flat = trained_spec.input_shape.size() == 1;

    PreparedData data = prepare_data(config, flat, log);
    const std::size_t n_classes = data.scene.n_classes();

    SurgerySpec surgery;
    const auto head_seed = field<std::uint64_t>(surgery_cfg, "head_seed", 42);
    if (surgery_cfg.contains("preset")) {
        const Variant variant = variant_from_name(surgery_cfg.at("preset").get<std::string>());
        surgery = default_surgery(variant, trained_spec, n_classes, head_seed);
    } else {
        surgery.drop_last = field<std::size_t>(surgery_cfg, "drop_last", 0);
        surgery.head_seed = head_seed;
        surgery.freeze_retained = field<bool>(surgery_cfg, "freeze_retained", true);
        if (!surgery_cfg.contains("head"))
            throw ConfigError("model.surgery needs either a preset or a head list");
        for (const auto& lj : surgery_cfg.at("head"))
            surgery.head.push_back(layer_from_json(lj));
    }

    auto [spec, params] = transfer_surgery(trained_spec, trained_params, surgery);

    // Geometry of the target patches must feed the retained trunk.
    const std::size_t expected =
        flat ? spec.input_shape[0] : Tensor<float>::numel(spec.input_shape);
    if (data.train.sample_floats() != expected)
        throw DimensionError("target patches (" + std::to_string(data.train.sample_floats()) +
                             " floats) do not match the trunk input (" +
                             std::to_string(expected) + ")");

    const auto counts = count_params(spec);
    const std::uint64_t trunk_before = frozen_trunk_digest(spec, params);
    if (log)
        *log << "surgery: " << counts.trainable << " trainable / " << counts.frozen
             << " frozen params, trunk digest " << std::hex << trunk_before << std::dec << "\n";

    const TrainConfig cfg = train_config(config);
    train(spec, params, data.train, cfg, log);

    const std::uint64_t trunk_after = frozen_trunk_digest(spec, params);
    if (log)
        *log << "trunk digest after training " << std::hex << trunk_after << std::dec
             << (trunk_after == trunk_before ? " (unchanged)" : " (CHANGED)") << "\n";
    if (trunk_after != trunk_before)
        throw ContractError("frozen trunk changed during head training");

    return finish_run(config, spec, params, data, cfg, head_seed, log);
}

Metrics run_eval(const EvalArgs& args, std::ostream* log) {
    auto [spec, params] = load_checkpoint<float>(args.checkpoint);
    const Scene scene = load_scene(args.scene);

    PcaModel pca;
    if (!args.pca.empty())
        pca = load_pca(args.pca);
    else
        pca = fit_pca(scene.cube, args.components);
    if (pca.bands != scene.bands())
        throw DimensionError("PCA model bands do not match the scene");

    const std::size_t window =
        args.window != 0 ? args.window : derive_window(spec, pca.components);

    const Cube reduced = apply_pca(scene.cube, pca);
    PatchSet patches = extract_patches(reduced, scene.labels, window);
    if (spec.input_shape.size() == 1) patches = flatten_patches(patches);

    SplitSpec split;
    split.train_fraction = args.train_fraction;
    split.seed = args.split_seed;
    split.stratified = args.stratified;
    auto [train_set, test_set] = split_train_test(patches, split);
    (void)train_set;

    const Metrics metrics = evaluate(spec, params, test_set);
    if (log)
        *log << "eval oa " << metrics.overall_accuracy << ", aa " << metrics.average_accuracy
             << ", loss " << metrics.loss << "\n";

    if (!args.metrics_out.empty()) {
        nlohmann::json report = metrics_to_json(metrics);
        report["seeds"] = {{"split", args.split_seed}};
        std::ofstream out(args.metrics_out, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + args.metrics_out);
        out << report.dump(2) << "\n";
    }
    return metrics;
}

void run_map(const MapArgs& args, std::ostream* log) {
    const Scene scene = load_scene(args.scene);

    if (args.ground_truth) {
        write_class_map(scene.labels, args.out);
        if (log) *log << "wrote ground-truth map " << args.out << "\n";
        return;
    }

    auto [spec, params] = load_checkpoint<float>(args.checkpoint);
    PcaModel pca;
    if (!args.pca.empty())
        pca = load_pca(args.pca);
    else
        pca = fit_pca(scene.cube, args.components);
    const std::size_t window =
        args.window != 0 ? args.window : derive_window(spec, pca.components);

    const LabelMask map = predict_map(spec, params, scene, pca, window, args.mask_unlabeled);
    write_class_map(map, args.out);
    if (log) *log << "wrote prediction map " << args.out << "\n";
}

}  // namespace hstl
