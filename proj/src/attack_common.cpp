#include "szero/attack_common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "szero/errors.hpp"

namespace szero {

namespace {

// Highest logit among classes other than y; ties keep the lowest index.
std::size_t runner_up(std::span<const double> logits, std::size_t y) {
    std::size_t best = y == 0 ? 1 : 0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        if (k != y && logits[k] > logits[best]) best = k;
    }
    return best;
}

void check_label(std::span<const double> logits, std::size_t y) {
    if (logits.size() < 2) throw ConfigError("need at least two logits");
    if (y >= logits.size()) {
        throw ConfigError("label " + std::to_string(y) + " out of range for " +
                          std::to_string(logits.size()) + " classes");
    }
}

}  // namespace

double adversarial_loss(std::span<const double> logits, std::size_t y) {
    check_label(logits, y);
    const bool correct = argmax(logits) == y;
    const double margin = logits[y] - logits[runner_up(logits, y)];
    return std::max(margin, 0.0) + (correct ? 1.0 : 0.0);
}

Tensor adversarial_loss_grad(std::span<const double> logits, std::size_t y) {
    check_label(logits, y);
    Tensor g({logits.size()});
    if (argmax(logits) == y) {
        g[y] = 1.0;
        g[runner_up(logits, y)] = -1.0;
    }
    return g;
}

bool is_adversarial(std::span<const double> logits, std::size_t y) {
    return argmax(logits) != y;
}

bool in_box(const Tensor& x, const Tensor& delta) {
    if (x.size() != delta.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i] + delta[i];
        if (!(v >= 0.0 && v <= 1.0)) return false;
    }
    return true;
}

bool verify_adversarial(const Model& model, const Tensor& x, std::size_t y, const Tensor& delta) {
    if (!in_box(x, delta)) return false;
    Tensor adv = x + delta.reshaped(x.shape());
    return is_adversarial(model.predict(adv).data(), y);
}

double box_delta(double x, double target) {
    double d = target - x;
    while (x + d > 1.0) d = std::nextafter(d, -std::numeric_limits<double>::infinity());
    while (x + d < 0.0) d = std::nextafter(d, std::numeric_limits<double>::infinity());
    return d;
}

void box_step(const Tensor& x, Tensor& delta, const Tensor& g, double eta) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double target = std::clamp(x[i] + delta[i] - eta * g[i], 0.0, 1.0);
        delta[i] = box_delta(x[i], target);
    }
}

void validate_sample(const Model& model, const Tensor& x, std::size_t y) {
    if (x.size() != model.input_size()) {
        throw ConfigError("sample shape " + shape_to_string(x.shape()) +
                          " does not match model input " + shape_to_string(model.input_shape()));
    }
    if (y >= model.num_classes()) {
        throw ConfigError("label " + std::to_string(y) + " out of range");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= 0.0 && x[i] <= 1.0)) {
            throw ConfigError("sample component " + std::to_string(i) + " outside [0, 1]");
        }
    }
}

}  // namespace szero
