// hstl - hyperspectral terrain classification via transfer learning.
// Subcommands: synth, train, transfer, eval, map.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "hstl/pipeline.hpp"
#include "hstl/threading.hpp"

namespace {

// Exit codes: 0 ok, 2 config, 3 divergence, 4 I/O, 5 surgery, 6 geometry.
int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const hstl::DimensionError*>(&e)) return 6;
    if (dynamic_cast<const hstl::SurgeryError*>(&e)) return 5;
    if (dynamic_cast<const hstl::IoError*>(&e)) return 4;
    if (dynamic_cast<const hstl::FormatError*>(&e)) return 4;
    if (dynamic_cast<const hstl::DivergenceError*>(&e)) return 3;
    if (dynamic_cast<const hstl::NumericError*>(&e)) return 3;
    return 2;
}

// Leftover "--a.b.c value" pairs become config overrides.
void apply_extras(nlohmann::json& config, const std::vector<std::string>& extras) {
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& flag = extras[i];
        if (flag.rfind("--", 0) != 0)
            throw hstl::ConfigError("unexpected argument: " + flag);
        std::string key = flag.substr(2);
        std::string value;
        const auto eq = key.find('=');
        if (eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else {
            if (i + 1 >= extras.size())
                throw hstl::ConfigError("override " + flag + " needs a value");
            value = extras[++i];
        }
        hstl::apply_override(config, key, value);
    }
}

void init_threads(int flag_value) {
    if (flag_value > 0) {
        hstl::set_threads(flag_value);
        return;
    }
    if (const char* env = std::getenv("HSTL_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) hstl::set_threads(n);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyperspectral terrain classification toolkit"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default 1, env HSTL_THREADS)");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic HSC1 scene");
    hstl::SynthSpec synth_spec;
    std::string synth_out = "scene.hsc";
    synth->add_option("--rows", synth_spec.rows);
    synth->add_option("--cols", synth_spec.cols);
    synth->add_option("--bands", synth_spec.bands);
    synth->add_option("--classes", synth_spec.n_classes);
    synth->add_option("--blobs", synth_spec.blob_count);
    synth->add_option("--noise", synth_spec.noise_sigma);
    synth->add_option("--seed", synth_spec.seed);
    synth->add_option("-o,--out", synth_out, "output scene path");

    // train / transfer share the config-plus-overrides shape
    auto* train = app.add_subcommand("train", "train a base model from a config");
    std::string train_config;
    train->add_option("config", train_config, "run config JSON")->required();
    train->allow_extras();

    auto* transfer = app.add_subcommand("transfer", "retrain a new head on a target scene");
    std::string transfer_config;
    transfer->add_option("config", transfer_config, "run config JSON")->required();
    transfer->allow_extras();

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a scene's test split");
    hstl::EvalArgs eval_args;
    eval->add_option("--checkpoint", eval_args.checkpoint)->required();
    eval->add_option("--scene", eval_args.scene)->required();
    eval->add_option("--pca", eval_args.pca, "PCA checkpoint (refit when omitted)");
    eval->add_option("--components", eval_args.components);
    eval->add_option("--window", eval_args.window, "0 = derive from the checkpoint");
    eval->add_option("--train-fraction", eval_args.train_fraction);
    eval->add_option("--split-seed", eval_args.split_seed);
    eval->add_flag("--stratified", eval_args.stratified);
    eval->add_option("-o,--metrics", eval_args.metrics_out);

    // map
    auto* map = app.add_subcommand("map", "render a classification map as PPM");
    hstl::MapArgs map_args;
    bool no_mask = false;
    map->add_option("--checkpoint", map_args.checkpoint);
    map->add_option("--scene", map_args.scene)->required();
    map->add_option("--pca", map_args.pca);
    map->add_option("--components", map_args.components);
    map->add_option("--window", map_args.window);
    map->add_flag("--no-mask", no_mask, "classify unlabeled pixels too");
    map->add_flag("--truth", map_args.ground_truth, "render the ground-truth labels");
    map->add_option("-o,--out", map_args.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad flags are config errors
    }
    init_threads(threads);

    try {
        if (*synth) {
            const hstl::Scene scene = hstl::generate_synthetic_scene(synth_spec);
            hstl::save_scene(scene, synth_out);
            std::cout << "wrote " << synth_out << "\n";
            for (const auto& entry : hstl::class_table(scene))
                std::cout << "  " << entry.name << ": " << entry.sample_count << " pixels\n";
        } else if (*train) {
            nlohmann::json config = hstl::load_config(train_config);
            apply_extras(config, train->remaining());
            hstl::run_train(config, &std::cout);
        } else if (*transfer) {
            nlohmann::json config = hstl::load_config(transfer_config);
            apply_extras(config, transfer->remaining());
            hstl::run_transfer(config, &std::cout);
        } else if (*eval) {
            hstl::run_eval(eval_args, &std::cout);
        } else if (*map) {
            if (!map_args.ground_truth && map_args.checkpoint.empty())
                throw hstl::ConfigError("map needs --checkpoint unless --truth is given");
            map_args.mask_unlabeled = !no_mask;
            hstl::run_map(map_args, &std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return 0;
}
