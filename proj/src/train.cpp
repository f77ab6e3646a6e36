#include "szero/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "szero/container.hpp"
#include "szero/errors.hpp"

namespace szero {

namespace {

// Softmax cross-entropy; writes d(loss)/d(logits) into grad.
double cross_entropy(const Tensor& logits, std::size_t y, Tensor& grad) {
    const double m = *std::max_element(logits.data().begin(), logits.data().end());
    double z = 0.0;
    for (double v : logits.data()) z += std::exp(v - m);
    grad = Tensor(logits.shape());
    for (std::size_t k = 0; k < logits.size(); ++k) {
        grad[k] = std::exp(logits[k] - m) / z - (k == y ? 1.0 : 0.0);
    }
    return std::log(z) + m - logits[y];
}

}  // namespace

void init_parameters(Model& model, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (Tensor* p : model.parameters()) {
        if (p->rank() == 1) {
            std::fill(p->data().begin(), p->data().end(), 0.0);
            continue;
        }
        const std::size_t fan_in = p->size() / p->shape()[0];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& v : p->data()) v = static_cast<double>(static_cast<float>(dist(rng)));
    }
}

double accuracy(const Model& model, const Dataset& data) {
    if (data.size() == 0) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        correct += model.classify(data.sample(i)) == data.labels[i];
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train(const Model& model_template, const Dataset& train_set, const Dataset* test_set,
                  const TrainOptions& options) {
    if (train_set.size() == 0) throw ConfigError("training set is empty");
    if (train_set.sample_size() != model_template.input_size()) {
        throw ConfigError("training samples of shape " + shape_to_string(train_set.sample_shape) +
                          " do not fit model input " + shape_to_string(model_template.input_shape()));
    }
    if (train_set.num_classes > model_template.num_classes()) {
        throw ConfigError("dataset has more classes than the model outputs");
    }
    if (options.batch_size == 0) throw ConfigError("batch_size must be >= 1");

    TrainResult result;
    result.model = model_template;
    Model& model = result.model;
    if (options.initialize) init_parameters(model, options.seed);

    std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<Tensor*> params = model.parameters();
    std::vector<Tensor> accum;
    accum.reserve(params.size());
    for (const Tensor* p : params) accum.emplace_back(p->shape());

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t end = std::min(order.size(), start + options.batch_size);
            for (Tensor& a : accum) std::fill(a.data().begin(), a.data().end(), 0.0);
            for (std::size_t b = start; b < end; ++b) {
                const std::size_t idx = order[b];
                ForwardResult fwd;
                try {
                    fwd = model.forward(train_set.sample(idx));
                } catch (const NumericError& e) {
                    throw TrainingError("diverged in epoch " + std::to_string(epoch + 1) + ": " + e.what());
                }
                Tensor dlogits;
                const double loss = cross_entropy(fwd.logits, train_set.labels[idx], dlogits);
                if (!std::isfinite(loss)) {
                    throw TrainingError("loss diverged in epoch " + std::to_string(epoch + 1));
                }
                total_loss += loss;
                const std::vector<Tensor> grads = model.backward_params(fwd.tape, dlogits);
                for (std::size_t p = 0; p < grads.size(); ++p) accum[p] += grads[p];
            }
            const double scale = options.lr / static_cast<double>(end - start);
            for (std::size_t p = 0; p < params.size(); ++p) {
                double* w = params[p]->data().data();
                const double* g = accum[p].data().data();
                for (std::size_t j = 0; j < params[p]->size(); ++j) w[j] -= scale * g[j];
            }
        }
        const double mean = total_loss / static_cast<double>(order.size());
        if (!std::isfinite(mean)) throw TrainingError("loss diverged");
        result.epoch_loss.push_back(mean);
    }

    for (const Tensor* p : model.parameters()) {
        if (!p->all_finite()) throw TrainingError("parameters became non-finite");
    }
    round_parameters_to_f32(model);
    model.set_storage_dtype(StorageDtype::F32);
    result.train_accuracy = accuracy(model, train_set);
    if (test_set) result.test_accuracy = accuracy(model, *test_set);
    return result;
}

}  // namespace szero
