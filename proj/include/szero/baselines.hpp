#pragma once

#include <cstddef>
#include <cstdint>

#include "szero/attack_common.hpp"

namespace szero {

// Reference attacks for comparison with sigma-zero. Both are fixed-budget:
// they stop at the first adversarial perturbation with at most budget_k
// nonzero components. They are simple references, not reimplementations of
// attacks from the literature.

enum class BaselineKind { TopKPGD, RandomSparse };

struct BaselineConfig {
    BaselineKind kind = BaselineKind::TopKPGD;
    std::size_t steps = 1000;
    std::size_t budget_k = 0;
    /// Initial step size of TopKPGD, annealed with cosine_step.
    double step = 0.5;
    /// RandomSparse runs (restarts + 1) rounds of `steps` trials.
    std::size_t restarts = 0;
    std::uint64_t seed = 0;

    /// Throws ConfigError when steps < 1 or budget_k > d.
    void validate(std::size_t d) const;
};

/// Normalized gradient steps on the loss alone, box clipping, then keep the
/// budget_k largest-magnitude components (lower index wins ties).
AttackResult topk_pgd(const Model& model, const Tensor& x, std::size_t y,
                      const BaselineConfig& cfg);

/// Forward-only search: each trial picks budget_k coordinates uniformly
/// without replacement and sets each to 0 or 1 with equal probability.
AttackResult random_sparse(const Model& model, const Tensor& x, std::size_t y,
                           const BaselineConfig& cfg);

AttackResult run_baseline(const Model& model, const Tensor& x, std::size_t y,
                          const BaselineConfig& cfg);

}  // namespace szero
