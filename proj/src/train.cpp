#include "hstl/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "hstl/errors.hpp"

namespace hstl {

using namespace nn;

namespace {

bool has_trainable_batchnorm(const ModelSpec& model) {
    for (const auto& layer : model.layers)
        if (layer.trainable && std::holds_alternative<BatchNorm>(layer.spec)) return true;
    return false;
}

// Gathers PatchSet rows into a batch tensor shaped for the model input.
Tensor<float> gather_batch(const PatchSet& set, const std::vector<std::size_t>& order,
                           std::size_t lo, std::size_t hi) {
    const std::size_t f = set.sample_floats();
    std::vector<std::size_t> shape;
    if (set.layout == PatchLayout::flat)
        shape = {hi - lo, f};
    else
        shape = {hi - lo, 1, set.bands, set.window, set.window};

    Tensor<float> batch(std::move(shape));
    for (std::size_t i = lo; i < hi; ++i)
        std::copy_n(set.sample(order[i]), f, batch.ptr() + (i - lo) * f);
    return batch;
}

std::vector<std::uint16_t> gather_labels(const PatchSet& set,
                                         const std::vector<std::size_t>& order, std::size_t lo,
                                         std::size_t hi) {
    std::vector<std::uint16_t> labels(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) labels[i - lo] = set.y[order[i]];
    return labels;
}

std::vector<std::uint16_t> argmax_rows(const Tensor<float>& probs) {
    const std::size_t n = probs.shape[0], k = probs.shape[1];
    std::vector<std::uint16_t> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const float* row = probs.ptr() + i * k;
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (row[j] > row[best]) best = j;  // ties keep the lowest index
        out[i] = static_cast<std::uint16_t>(best);
    }
    return out;
}

}  // namespace

std::vector<std::size_t> confusion_matrix(const std::vector<std::uint16_t>& preds,
                                          const std::vector<std::uint16_t>& labels,
                                          std::size_t n_classes) {
    if (preds.size() != labels.size())
        throw DimensionError("confusion_matrix: prediction/label count mismatch");
    std::vector<std::size_t> confusion(n_classes * n_classes, 0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (labels[i] >= n_classes || preds[i] >= n_classes)
            throw LabelError("confusion_matrix: entry out of range at sample " +
                             std::to_string(i));
        confusion[labels[i] * n_classes + preds[i]]++;
    }
    return confusion;
}

Metrics metrics_from_confusion(std::vector<std::size_t> confusion, std::size_t n_classes,
                               double loss) {
    Metrics m;
    m.confusion = std::move(confusion);
    m.n_classes = n_classes;
    m.loss = loss;
    m.per_class.assign(n_classes, -1.0);

    std::size_t total = 0, correct = 0, present = 0;
    double recall_sum = 0.0;
    for (std::size_t t = 0; t < n_classes; ++t) {
        std::size_t row = 0;
        for (std::size_t p = 0; p < n_classes; ++p) row += m.at(t, p);
        total += row;
        correct += m.at(t, t);
        if (row > 0) {
            m.per_class[t] = static_cast<double>(m.at(t, t)) / static_cast<double>(row);
            recall_sum += m.per_class[t];
            present++;
        }
    }
    m.overall_accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    m.average_accuracy = present ? recall_sum / static_cast<double>(present) : 0.0;
    return m;
}

nlohmann::json metrics_to_json(const Metrics& m) {
    nlohmann::json confusion = nlohmann::json::array();
    for (std::size_t t = 0; t < m.n_classes; ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t p = 0; p < m.n_classes; ++p) row.push_back(m.at(t, p));
        confusion.push_back(std::move(row));
    }
    nlohmann::json per_class = nlohmann::json::array();
    for (const double r : m.per_class) {
        if (r < 0)
            per_class.push_back(nullptr);
        else
            per_class.push_back(r);
    }
    return nlohmann::json{{"oa", m.overall_accuracy},
                          {"aa", m.average_accuracy},
                          {"loss", m.loss},
                          {"per_class", per_class},
                          {"confusion", confusion}};
}

std::string metrics_table(const Metrics& m, const std::vector<std::string>& class_names) {
    std::ostringstream out;
    out << std::fixed;
    out << "  class                           recall   support\n";
    for (std::size_t t = 0; t < m.n_classes; ++t) {
        std::size_t row = 0;
        for (std::size_t p = 0; p < m.n_classes; ++p) row += m.at(t, p);
        const std::string name =
            t < class_names.size() ? class_names[t] : "class_" + std::to_string(t + 1);
        out << "  " << std::left << std::setw(30) << name << "  ";
        if (m.per_class[t] < 0)
            out << "   n/a";
        else
            out << std::right << std::setw(6) << std::setprecision(4) << m.per_class[t];
        out << std::right << std::setw(10) << row << "\n";
    }
    out << "  overall accuracy " << std::setprecision(4) << m.overall_accuracy
        << ", average accuracy " << m.average_accuracy << ", loss " << m.loss << "\n";
    return out.str();
}

History train(const ModelSpec& model, Params<float>& params, const PatchSet& trainset,
              const TrainConfig& cfg, std::ostream* log) {
    if (trainset.n_samples == 0) throw ConfigError("training set is empty");
    if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
    const bool bn_training = has_trainable_batchnorm(model);
    if (bn_training && cfg.batch_size < 2)
        throw BatchError("batch_size must be >= 2 while batch norm trains");
    const std::size_t k = model.n_classes;
    for (const auto y : trainset.y)
        if (y >= k) throw LabelError("training label " + std::to_string(y) + " out of range");

    AdamState<float> state = make_adam_state(model, params, cfg.adam);
    History history;
    history.reserve(cfg.epochs);

    const std::size_t n = trainset.n_samples;
    std::vector<std::size_t> order(n);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();

        // Streams 2e / 2e+1 of the run seed: shuffle and dropout.
        Pcg32 shuffle_rng(cfg.seed, 2 * epoch);
        Pcg32 dropout_rng(cfg.seed, 2 * epoch + 1);
        std::iota(order.begin(), order.end(), std::size_t{0});
        fisher_yates_shuffle(order, shuffle_rng);

        std::vector<std::pair<std::size_t, std::size_t>> batches;
        for (std::size_t lo = 0; lo < n; lo += cfg.batch_size)
            batches.emplace_back(lo, std::min(n, lo + cfg.batch_size));
        if (bn_training && batches.size() > 1 &&
            batches.back().second - batches.back().first < 2) {
            batches[batches.size() - 2].second = batches.back().second;
            batches.pop_back();
        }

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const auto [lo, hi] = batches[bi];
            const Tensor<float> x = gather_batch(trainset, order, lo, hi);
            const auto labels = gather_labels(trainset, order, lo, hi);

            Trace<float> trace = forward(model, params, x, EngineMode{.training = true},
                                         &dropout_rng);
            const auto xent = softmax_cross_entropy(trace.inputs.back(), labels);
            if (!std::isfinite(static_cast<double>(xent.loss)))
                throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                      ", batch " + std::to_string(bi));
            loss_sum += static_cast<double>(xent.loss) * static_cast<double>(hi - lo);

            const auto preds = argmax_rows(xent.probs);
            for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == labels[i];

            Grads<float> grads = backward(model, params, trace, labels);
            adam_step(model, params, grads, state);

            if (log != nullptr && cfg.log_every != 0 && (bi + 1) % cfg.log_every == 0)
                *log << "    batch " << bi + 1 << "/" << batches.size() << " loss "
                     << static_cast<double>(xent.loss) << "\n";
        }

        EpochStats stats;
        stats.loss = loss_sum / static_cast<double>(n);
        stats.accuracy = static_cast<double>(correct) / static_cast<double>(n);
        stats.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        history.push_back(stats);
        if (log != nullptr)
            *log << "  epoch " << epoch + 1 << "/" << cfg.epochs << "  loss " << stats.loss
                 << "  acc " << stats.accuracy << "  (" << stats.seconds << "s)\n";
    }
    return history;
}

std::vector<std::uint16_t> predict(const ModelSpec& model, Params<float>& params,
                                   const PatchSet& set) {
    constexpr std::size_t kBatch = 256;
    std::vector<std::size_t> order(set.n_samples);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<std::uint16_t> preds;
    preds.reserve(set.n_samples);
    for (std::size_t lo = 0; lo < set.n_samples; lo += kBatch) {
        const std::size_t hi = std::min(set.n_samples, lo + kBatch);
        const Tensor<float> x = gather_batch(set, order, lo, hi);
        Trace<float> trace = forward(model, params, x, EngineMode{.training = false});
        const auto batch_preds = argmax_rows(trace.output);
        preds.insert(preds.end(), batch_preds.begin(), batch_preds.end());
    }
    return preds;
}

Metrics evaluate(const ModelSpec& model, Params<float>& params, const PatchSet& testset) {
    if (testset.n_samples == 0) throw EvalError("test set is empty");
    const std::size_t k = model.n_classes;

    constexpr std::size_t kBatch = 256;
    std::vector<std::size_t> order(testset.n_samples);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<std::uint16_t> preds;
    preds.reserve(testset.n_samples);
    double loss_sum = 0.0;
    for (std::size_t lo = 0; lo < testset.n_samples; lo += kBatch) {
        const std::size_t hi = std::min(testset.n_samples, lo + kBatch);
        const Tensor<float> x = gather_batch(testset, order, lo, hi);
        const auto labels = gather_labels(testset, order, lo, hi);
        Trace<float> trace = forward(model, params, x, EngineMode{.training = false});
        const auto xent = softmax_cross_entropy(trace.inputs.back(), labels);
        loss_sum += static_cast<double>(xent.loss) * static_cast<double>(hi - lo);
        const auto batch_preds = argmax_rows(xent.probs);
        preds.insert(preds.end(), batch_preds.begin(), batch_preds.end());
    }

    return metrics_from_confusion(confusion_matrix(preds, testset.y, k), k,
                                  loss_sum / static_cast<double>(testset.n_samples));
}

LabelMask predict_map(const ModelSpec& model, Params<float>& params, const Scene& scene,
                      const PcaModel& pca, std::size_t window, bool mask_unlabeled) {
    const std::size_t expected = model.input_shape.size() == 1
                                     ? model.input_shape[0]
                                     : Tensor<float>::numel(model.input_shape);
    if (window * window * pca.components != expected)
        throw DimensionError("scene geometry (window " + std::to_string(window) + ", " +
                             std::to_string(pca.components) +
                             " components) does not match the model input");

    const Cube reduced = apply_pca(scene.cube, pca);

    // Every pixel becomes a sample. Rows are processed in blocks to bound
    // the patch buffer (window 25 over a full scene would not fit whole).
    const std::size_t per_row = scene.cols() * window * window * pca.components * 4;
    const std::size_t block_rows = std::max<std::size_t>(1, (64u << 20) / std::max<std::size_t>(per_row, 1));

    LabelMask map(scene.rows(), scene.cols());
    LabelMask block_mask(scene.rows(), scene.cols());
    for (std::size_t r0 = 0; r0 < scene.rows(); r0 += block_rows) {
        const std::size_t r1 = std::min(scene.rows(), r0 + block_rows);
        std::fill(block_mask.data.begin(), block_mask.data.end(), std::uint16_t{0});
        for (std::size_t r = r0; r < r1; ++r)
            for (std::size_t c = 0; c < scene.cols(); ++c) block_mask.at(r, c) = 1;

        PatchSet patches = extract_patches(reduced, block_mask, window);
        if (model.input_shape.size() == 1) patches = flatten_patches(patches);
        const auto preds = predict(model, params, patches);

        const std::size_t base = r0 * scene.cols();
        for (std::size_t i = 0; i < preds.size(); ++i)
            map.data[base + i] = static_cast<std::uint16_t>(preds[i] + 1);
    }

    if (mask_unlabeled)
        for (std::size_t i = 0; i < map.data.size(); ++i)
            if (scene.labels.data[i] == 0) map.data[i] = 0;
    return map;
}

}  // namespace hstl
