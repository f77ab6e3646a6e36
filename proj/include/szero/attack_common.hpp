#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "szero/model.hpp"
#include "szero/tensor.hpp"

namespace szero {

/// One row of an optional per-iteration trace.
struct IterationRecord {
    std::size_t iteration = 0;
    double loss = 0.0;       // L(x + delta) after the update
    double smooth_l0 = 0.0;  // surrogate of delta after the update
    std::size_t l0 = 0;      // exact nonzero count after the update
    double tau = 0.0;        // threshold after its adjustment
    double eta = 0.0;        // annealed step size
    bool adversarial = false;
};

/// Per-sample outcome of any attack in this library.
struct AttackResult {
    /// Best perturbation found; nullopt when the attack failed.
    std::optional<Tensor> delta_star;
    /// Nonzero count of delta_star; nullopt encodes an infinite norm.
    std::optional<std::size_t> l0_star;
    std::size_t forwards = 0;
    std::size_t backwards = 0;
    std::optional<std::size_t> iterations_to_first_adv;
    /// True when a fixed budget stopped the loop before its last iteration.
    bool early_stopped = false;
    /// l0 of every improvement of the best-so-far, in order.
    std::vector<std::size_t> best_history;
    std::vector<IterationRecord> trace;

    bool succeeded() const { return l0_star.has_value(); }
    std::size_t queries() const { return forwards + backwards; }
};

/// Logit-difference loss with correct-classification indicator:
/// max(f_y - max_{k!=y} f_k, 0) + 1[argmax f == y].
/// Zero exactly when the logits are misclassified, at least 1 otherwise.
double adversarial_loss(std::span<const double> logits, std::size_t y);

/// Gradient of adversarial_loss w.r.t. the logits. The indicator term
/// contributes nothing. While the input is still classified as y the margin
/// term is differentiated even at a zero margin (tie), so the descent can
/// leave the tie.
Tensor adversarial_loss_grad(std::span<const double> logits, std::size_t y);

/// argmax(logits) != y with lowest-index tie-breaking.
bool is_adversarial(std::span<const double> logits, std::size_t y);

/// Componentwise 0 <= x + delta <= 1.
bool in_box(const Tensor& x, const Tensor& delta);

/// Fresh forward pass (not counted as a query) confirming that x + delta is
/// in the box and misclassified.
bool verify_adversarial(const Model& model, const Tensor& x, std::size_t y, const Tensor& delta);

/// delta_i <- clip(x_i + delta_i - eta * g_i, 0, 1) - x_i, with the result
/// nudged by an ulp where rounding would otherwise leave x + delta outside
/// the box.
void box_step(const Tensor& x, Tensor& delta, const Tensor& g, double eta);

/// Smallest delta component d such that x + d stays in [0, 1] for a target
/// value already clipped to [0, 1].
double box_delta(double x, double target);

void validate_sample(const Model& model, const Tensor& x, std::size_t y);

}  // namespace szero
