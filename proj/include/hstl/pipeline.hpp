#pragma once

#include <iosfwd>
#include <optional>

#include "hstl/models.hpp"
#include "hstl/train.hpp"

namespace hstl {

// Run configuration JSON (see README for the schema):
//   scene{path}, pca{components, checkpoint}, patches{window, stratified,
//   train_fraction, seed}, model{variant, seed | checkpoint, surgery},
//   train{epochs, batch_size, seed, lr}, outputs{checkpoint, metrics, map}.
// All seeds default to 42 and are echoed into the metrics JSON.
nlohmann::json load_config(const std::string& path);

// Dot-path override: "train.epochs" -> config["train"]["epochs"]. The
// value string is parsed as JSON when possible, else kept as a string.
void apply_override(nlohmann::json& config, const std::string& dotted_key,
                    const std::string& value);

struct RunOutcome {
    Metrics metrics;
    nn::ModelSpec spec;
    std::string metrics_json;  // exact bytes written to outputs.metrics
    std::string checkpoint_path;
    std::string pca_path;
};

// Full base-training pipeline: load scene, fit/apply PCA, extract patches
// (flattening for MLP variants), split, init, train, evaluate, write
// artifacts.
RunOutcome run_train(const nlohmann::json& config, std::ostream* log = nullptr);

// Transfer pipeline: load the source checkpoint, apply the configured
// surgery (preset or explicit), retrain the head on the target scene,
// evaluate, write artifacts. Logs trainable/frozen counts and the frozen
// trunk checksum before and after training.
RunOutcome run_transfer(const nlohmann::json& config, std::ostream* log = nullptr);

struct EvalArgs {
    std::string checkpoint;
    std::string scene;
    std::string pca;              // optional; refit when empty
    std::size_t components = 30;  // used when refitting
    std::size_t window = 0;       // 0 = derive from the checkpoint
    double train_fraction = 0.7;
    std::uint64_t split_seed = 42;
    bool stratified = false;
    std::string metrics_out;  // optional
};

Metrics run_eval(const EvalArgs& args, std::ostream* log = nullptr);

struct MapArgs {
    std::string checkpoint;
    std::string scene;
    std::string pca;
    std::size_t components = 30;
    std::size_t window = 0;
    bool mask_unlabeled = true;
    bool ground_truth = false;  // render labels instead of predictions
    std::string out;
};

void run_map(const MapArgs& args, std::ostream* log = nullptr);

// FNV-1a over every frozen tensor's bytes in checkpoint order.
std::uint64_t frozen_trunk_digest(const nn::ModelSpec& model, const nn::Params<float>& params);

// Window implied by a model's input shape and component count.
std::size_t derive_window(const nn::ModelSpec& model, std::size_t components);

}  // namespace hstl
