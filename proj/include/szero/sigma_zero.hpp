#pragma once

#include <cstddef>
#include <optional>

#include "szero/attack_common.hpp"

namespace szero {

/// Hyperparameters of the sigma-zero attack. For models trained to resist
/// sparse attacks, sigma = 1 and tau0 = 0.1 tend to work better.
struct AttackConfig {
    std::size_t steps = 1000;
    double eta0 = 1.0;
    double sigma = 1e-3;
    double tau0 = 0.3;
    double t = 0.01;
    /// When set, the attack returns as soon as an adversarial perturbation
    /// with at most this many nonzero components is found.
    std::optional<std::size_t> budget_k;

    bool grad_normalization = true;
    bool adaptive_tau = true;
    bool projection = true;

    bool record_trace = false;

    /// Throws ConfigError on N < 1, eta0 <= 0, sigma <= 0, tau0 outside
    /// [0, 1] or t < 0.
    void validate() const;
};

/// Smooth l0 surrogate sum_i v_i^2 / (v_i^2 + sigma), in [0, d].
double smooth_l0(const Tensor& v, double sigma);

/// Componentwise 2 v_i sigma / (v_i^2 + sigma)^2.
Tensor smooth_l0_grad(const Tensor& v, double sigma);

/// Zeroes every component with |delta_i| < tau (strict). Zeros are exact.
Tensor project_tau(const Tensor& delta, double tau);
void project_tau_inplace(Tensor& delta, double tau);

/// g / max|g_i|, or g unchanged when max|g_i| < 1e-12.
Tensor normalize_grad(const Tensor& g);

/// eta0 * (1 + cos(pi * i / N)) / 2 for 1 <= i <= N; reaches 0 at i = N.
double cosine_step(double eta0, std::size_t i, std::size_t total);

/// Minimum-l0 untargeted attack on a single sample.
///
/// Every iteration costs one backward pass (on the tape of the previous
/// forward) and one forward pass at the updated perturbation. The forward
/// after iteration i decides the tau adjustment and best tracking of that
/// iteration, so a full run issues N + 1 forwards and N backwards. An input
/// that is already misclassified returns a zero perturbation after a single
/// forward.
AttackResult sigma_zero_attack(const Model& model, const Tensor& x, std::size_t y,
                               const AttackConfig& cfg);

}  // namespace szero
