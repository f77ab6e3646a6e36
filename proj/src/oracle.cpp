#include "szero/oracle.hpp"

#include <cmath>
#include <limits>

#include "szero/attack_common.hpp"
#include "szero/errors.hpp"

namespace szero {

namespace {

std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return static_cast<std::size_t>(std::llround(r));
}

// Advances `subset` (strictly increasing indices < n) to the next subset of
// the same size in lexicographic order. Returns false after the last one.
bool next_subset(std::vector<std::size_t>& subset, std::size_t n) {
    const std::size_t k = subset.size();
    for (std::size_t i = k; i-- > 0;) {
        if (subset[i] < n - k + i) {
            ++subset[i];
            for (std::size_t j = i + 1; j < k; ++j) subset[j] = subset[j - 1] + 1;
            return true;
        }
    }
    return false;
}

}  // namespace

void OracleConfig::validate() const {
    if (max_support < 1 || max_support > 3) throw ConfigError("max_support must be in 1..3");
    if (grid_levels.empty()) throw ConfigError("grid_levels must be nonempty");
    for (double g : grid_levels) {
        if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("grid levels must lie in [0, 1]");
    }
}

std::size_t oracle_candidate_count(std::size_t d, const OracleConfig& cfg) {
    double total = 0.0;
    for (std::size_t s = 1; s <= cfg.max_support; ++s) {
        total += static_cast<double>(binomial(d, s)) *
                 std::pow(static_cast<double>(cfg.grid_levels.size()), static_cast<double>(s));
    }
    return total > static_cast<double>(std::numeric_limits<std::size_t>::max() / 2)
               ? std::numeric_limits<std::size_t>::max() / 2
               : static_cast<std::size_t>(total);
}

OracleResult min_l0_bruteforce(const Model& model, const Tensor& x_in, std::size_t y,
                               const OracleConfig& cfg) {
    cfg.validate();
    validate_sample(model, x_in, y);
    const Tensor x = x_in.reshaped(model.input_shape());
    const std::size_t d = x.size();
    if (d > cfg.feature_limit) {
        throw ConfigError("input size " + std::to_string(d) + " exceeds oracle feature_limit " +
                          std::to_string(cfg.feature_limit));
    }

    OracleResult result;
    result.evaluations = 1;
    if (is_adversarial(model.predict(x).data(), y)) {
        result.k_min = 0;
        result.witness = Tensor(x.shape());
        return result;
    }

    const std::size_t needed = oracle_candidate_count(d, cfg);
    if (needed > cfg.evaluation_cap) {
        throw ConfigError("oracle enumeration needs " + std::to_string(needed) +
                          " evaluations, above the cap of " + std::to_string(cfg.evaluation_cap));
    }

    const std::size_t levels = cfg.grid_levels.size();
    Tensor candidate = x;
    for (std::size_t support = 1; support <= std::min(cfg.max_support, d); ++support) {
        std::vector<std::size_t> subset(support);
        for (std::size_t i = 0; i < support; ++i) subset[i] = i;
        do {
            // Odometer over grid assignments of the chosen coordinates.
            std::vector<std::size_t> level(support, 0);
            while (true) {
                bool changes_all = true;
                for (std::size_t j = 0; j < support; ++j) {
                    if (cfg.grid_levels[level[j]] == x[subset[j]]) {
                        changes_all = false;
                        break;
                    }
                }
                if (changes_all) {
                    candidate = x;
                    for (std::size_t j = 0; j < support; ++j) {
                        candidate[subset[j]] = cfg.grid_levels[level[j]];
                    }
                    ++result.evaluations;
                    if (is_adversarial(model.predict(candidate).data(), y)) {
                        Tensor witness(x.shape());
                        for (std::size_t j = 0; j < support; ++j) {
                            const std::size_t c = subset[j];
                            witness[c] = box_delta(x[c], candidate[c]);
                        }
                        if (!verify_adversarial(model, x, y, witness)) {
                            throw IntegrityError("oracle witness failed re-verification");
                        }
                        result.k_min = support;
                        result.witness = std::move(witness);
                        return result;
                    }
                }
                std::size_t j = support;
                while (j-- > 0) {
                    if (++level[j] < levels) break;
                    level[j] = 0;
                }
                if (j == static_cast<std::size_t>(-1)) break;
            }
        } while (next_subset(subset, d));
    }
    return result;
}

}  // namespace szero
