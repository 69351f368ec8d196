#pragma once

#include <cstdint>

#include "isal/dataset.hpp"
#include "isal/network.hpp"

namespace isal {

struct TrainConfig {
    std::size_t epochs = 0;
    double learning_rate = 0.01;
    std::size_t batch_size = 8;
    std::uint64_t seed = 0;
};

struct TrainResult {
    NetworkModel model;
    double final_train_accuracy = 0.0;
};

// Plain SGD on cross-entropy over the manifest's images. Shuffle order is a
// pure function of the seed, so training is fully deterministic. Zero epochs
// returns the input model unchanged (accuracy of the initial weights).
// The trainer only ever sees class labels, never the fixation data.
TrainResult train(const NetworkModel& model, const DatasetManifest& data, const TrainConfig& cfg);

}  // namespace isal
