#pragma once

#include <json.hpp>

#include "hstl/nn/adam.hpp"
#include "hstl/patches.hpp"
#include "hstl/pca.hpp"

namespace hstl {

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 128;
    std::uint64_t seed = 42;
    nn::AdamConfig adam;
    std::size_t log_every = 0;  // batches; 0 disables batch logging
};

struct EpochStats {
    double loss = 0.0;      // sample-weighted mean training loss
    double accuracy = 0.0;  // training accuracy over the epoch's forwards
    double seconds = 0.0;
};
using History = std::vector<EpochStats>;

struct Metrics {
    std::vector<std::size_t> confusion;  // K*K row-major, [true][pred]
    std::size_t n_classes = 0;
    double overall_accuracy = 0.0;
    double average_accuracy = 0.0;
    // Per-class recall; classes with zero test support carry -1 and are
    // excluded from the average.
    std::vector<double> per_class;
    double loss = 0.0;

    std::size_t at(std::size_t t, std::size_t p) const { return confusion[t * n_classes + p]; }
};

std::vector<std::size_t> confusion_matrix(const std::vector<std::uint16_t>& preds,
                                          const std::vector<std::uint16_t>& labels,
                                          std::size_t n_classes);

Metrics metrics_from_confusion(std::vector<std::size_t> confusion, std::size_t n_classes,
                               double loss);

// Metrics report JSON: {aa, confusion, loss, oa, per_class}; extra keys
// (seed echoes etc.) may be merged in by the caller.
nlohmann::json metrics_to_json(const Metrics& metrics);
std::string metrics_table(const Metrics& metrics, const std::vector<std::string>& class_names);

// Mini-batch Adam training. Per epoch: Fisher-Yates reshuffle on
// PCG32(seed, stream 2*epoch), dropout masks on PCG32(seed, stream
// 2*epoch+1), sequential batches (a trailing singleton is folded into the
// previous batch when batch-norm trains), forward/backward/adam_step.
// Deterministic for a fixed seed; frozen tensors never move.
History train(const nn::ModelSpec& model, nn::Params<float>& params, const PatchSet& trainset,
              const TrainConfig& cfg, std::ostream* log = nullptr);

// Inference-mode evaluation (dropout off, batch-norm running stats).
Metrics evaluate(const nn::ModelSpec& model, nn::Params<float>& params, const PatchSet& testset);

// Batch argmax class predictions (0-based), ties to the lowest index.
std::vector<std::uint16_t> predict(const nn::ModelSpec& model, nn::Params<float>& params,
                                   const PatchSet& set);

// Classifies every pixel of a scene: PCA projection, one patch per pixel,
// argmax+1. When mask_unlabeled, pixels with ground-truth label 0 stay 0
// so the background renders black.
LabelMask predict_map(const nn::ModelSpec& model, nn::Params<float>& params, const Scene& scene,
                      const PcaModel& pca, std::size_t window, bool mask_unlabeled = true);

}  // namespace hstl
