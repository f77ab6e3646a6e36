#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "szero/dataset.hpp"
#include "szero/model.hpp"

namespace szero {

/// He-uniform weights, zero biases; every value is float32-representable.
void init_parameters(Model& model, std::uint64_t seed);

struct TrainOptions {
    std::size_t epochs = 5;
    double lr = 0.02;
    std::size_t batch_size = 1;
    std::uint64_t seed = 0;
    /// Initialize parameters from the seed before training. When false the
    /// template's parameters are the starting point.
    bool initialize = true;
};

struct TrainResult {
    Model model;
    double train_accuracy = 0.0;
    std::optional<double> test_accuracy;
    std::vector<double> epoch_loss;  // mean cross-entropy per epoch
};

/// Minibatch SGD on softmax cross-entropy with a seeded shuffle per epoch.
/// Sequential and therefore bitwise reproducible. The returned parameters
/// are rounded to float32 so they survive the SZM1 round trip unchanged.
/// Throws TrainingError if the loss becomes non-finite.
TrainResult train(const Model& model_template, const Dataset& train_set, const Dataset* test_set,
                  const TrainOptions& options);

double accuracy(const Model& model, const Dataset& data);

}  // namespace szero
