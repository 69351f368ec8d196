#include "isal/train.hpp"

#include <numeric>
#include <vector>

#include "isal/engine.hpp"
#include "isal/errors.hpp"
#include "isal/model_io.hpp"
#include "isal/rng.hpp"

namespace isal {

TrainResult train(const NetworkModel& model, const DatasetManifest& data, const TrainConfig& cfg) {
    if (cfg.learning_rate <= 0.0) throw InvalidConfig("learning rate must be positive");
    if (cfg.batch_size < 1) throw InvalidConfig("batch size must be positive");
    if (data.split != "train") throw DataError("training requires a manifest with split 'train'");
    validate_model(model);

    std::vector<Tensor> images;
    std::vector<std::size_t> labels;
    images.reserve(data.records.size());
    for (const auto& rec : data.records) {
        if (static_cast<std::size_t>(rec.class_label) >= model.class_count) {
            throw DataError("record '" + rec.image_file + "' label " + std::to_string(rec.class_label) +
                            " out of range for " + std::to_string(model.class_count) + " classes");
        }
        images.push_back(load_dataset_image(data, rec));
        labels.push_back(static_cast<std::size_t>(rec.class_label));
    }

    TrainResult result;
    result.model = model;
    NetworkModel& m = result.model;

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(images.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());

            ParamGrads batch;
            batch.weights.resize(m.layers.size());
            batch.bias.resize(m.layers.size());
            for (std::size_t l = 0; l < m.layers.size(); ++l) {
                if (m.layers[l].has_params()) {
                    batch.weights[l] = Tensor::zeros(m.layers[l].weights.shape());
                    batch.bias[l] = Tensor::zeros(m.layers[l].bias.shape());
                }
            }
            for (std::size_t s = start; s < end; ++s) {
                const std::size_t idx = order[s];
                const ActivationTrace trace = forward(m, images[idx]);
                const auto ce = cross_entropy(trace.logits(), labels[idx]);
                const ParamGrads g = backward_params(m, trace, ce.grad_logits);
                for (std::size_t l = 0; l < m.layers.size(); ++l) {
                    if (!m.layers[l].has_params()) continue;
                    for (std::size_t i = 0; i < g.weights[l].size(); ++i) batch.weights[l][i] += g.weights[l][i];
                    for (std::size_t i = 0; i < g.bias[l].size(); ++i) batch.bias[l][i] += g.bias[l][i];
                }
            }
            const double scale = cfg.learning_rate / static_cast<double>(end - start);
            for (std::size_t l = 0; l < m.layers.size(); ++l) {
                if (!m.layers[l].has_params()) continue;
                for (std::size_t i = 0; i < batch.weights[l].size(); ++i) {
                    m.layers[l].weights[i] -= scale * batch.weights[l][i];
                }
                for (std::size_t i = 0; i < batch.bias[l].size(); ++i) {
                    m.layers[l].bias[i] -= scale * batch.bias[l][i];
                }
            }
        }
    }

    std::size_t correct = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (predict(m, images[i]).class_index == labels[i]) ++correct;
    }
    result.final_train_accuracy = static_cast<double>(correct) / static_cast<double>(images.size());
    m.meta.seed = cfg.seed;
    m.meta.epochs = static_cast<int>(cfg.epochs);
    return result;
}

}  // namespace isal
