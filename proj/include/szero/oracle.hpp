#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "szero/model.hpp"

namespace szero {

struct OracleConfig {
    /// Largest support size enumerated (1..3).
    std::size_t max_support = 2;
    /// Candidate values a perturbed coordinate may take.
    std::vector<double> grid_levels{0.0, 1.0};
    /// Largest input dimension accepted for enumeration.
    std::size_t feature_limit = 64;
    /// Refuse instances that would need more forward passes than this.
    std::size_t evaluation_cap = 10'000'000;

    void validate() const;
};

struct OracleResult {
    /// Smallest support admitting misclassification, or nullopt when none
    /// exists within max_support.
    std::optional<std::size_t> k_min;
    /// Perturbation achieving k_min.
    std::optional<Tensor> witness;
    std::size_t evaluations = 0;
};

/// Upper bound on forward passes needed by min_l0_bruteforce for d inputs.
std::size_t oracle_candidate_count(std::size_t d, const OracleConfig& cfg);

/// Exhaustive minimal-l0 search over coordinate subsets of size
/// 1..max_support in lexicographic order, each coordinate set to a grid
/// level different from its current value. Returns k_min = 0 when x is
/// already misclassified. The first witness in enumeration order wins, so the
/// result is deterministic.
OracleResult min_l0_bruteforce(const Model& model, const Tensor& x, std::size_t y,
                               const OracleConfig& cfg);

}  // namespace szero
