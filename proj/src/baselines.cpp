#include "szero/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "szero/errors.hpp"
#include "szero/sigma_zero.hpp"

namespace szero {

namespace {

AttackResult already_misclassified(const Tensor& x, std::size_t forwards) {
    AttackResult result;
    result.delta_star = Tensor(x.shape());
    result.l0_star = 0;
    result.iterations_to_first_adv = 0;
    result.best_history.push_back(0);
    result.forwards = forwards;
    return result;
}

// Zero all but the k largest |delta_i|; on equal magnitudes the lower index
// is kept.
void keep_top_k(Tensor& delta, std::size_t k, std::vector<std::size_t>& order) {
    if (k >= delta.size()) return;
    order.resize(delta.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         const double ma = std::abs(delta[a]);
                         const double mb = std::abs(delta[b]);
                         return ma != mb ? ma > mb : a < b;
                     });
    for (auto it = order.begin() + static_cast<std::ptrdiff_t>(k); it != order.end(); ++it) {
        delta[*it] = 0.0;
    }
}

}  // namespace

void BaselineConfig::validate(std::size_t d) const {
    if (steps < 1) throw ConfigError("steps must be >= 1");
    if (budget_k > d) {
        throw ConfigError("budget_k " + std::to_string(budget_k) + " exceeds input size " +
                          std::to_string(d));
    }
    if (kind == BaselineKind::TopKPGD && !(step > 0.0)) throw ConfigError("step must be > 0");
}

AttackResult topk_pgd(const Model& model, const Tensor& x_in, std::size_t y,
                      const BaselineConfig& cfg) {
    validate_sample(model, x_in, y);
    cfg.validate(x_in.size());
    const Tensor x = x_in.reshaped(model.input_shape());

    QueryCounter queries(model);
    ForwardResult fwd = queries.forward(x);
    if (is_adversarial(fwd.logits.data(), y)) return already_misclassified(x, queries.forwards());

    AttackResult result;
    if (cfg.budget_k == 0) {
        result.forwards = queries.forwards();
        return result;
    }

    Tensor delta(x.shape());
    std::vector<std::size_t> order;
    double eta = cfg.step;
    for (std::size_t i = 1; i <= cfg.steps; ++i) {
        const Tensor dlogits = adversarial_loss_grad(fwd.logits.data(), y);
        Tensor g = queries.backward_input(fwd.tape, dlogits);
        if (!g.all_finite()) {
            throw NumericError("non-finite gradient at iteration " + std::to_string(i));
        }
        g = normalize_grad(g);
        box_step(x, delta, g, eta);
        keep_top_k(delta, cfg.budget_k, order);
        eta = cosine_step(cfg.step, i, cfg.steps);

        fwd = queries.forward(x + delta);
        if (is_adversarial(fwd.logits.data(), y)) {
            result.iterations_to_first_adv = i;
            result.early_stopped = i < cfg.steps;
            if (verify_adversarial(model, x, y, delta)) {
                result.l0_star = delta.count_nonzero();
                result.best_history.push_back(*result.l0_star);
                result.delta_star = std::move(delta);
            }
            break;
        }
    }
    result.forwards = queries.forwards();
    result.backwards = queries.backwards();
    return result;
}

AttackResult random_sparse(const Model& model, const Tensor& x_in, std::size_t y,
                           const BaselineConfig& cfg) {
    validate_sample(model, x_in, y);
    cfg.validate(x_in.size());
    const Tensor x = x_in.reshaped(model.input_shape());
    const std::size_t d = x.size();

    QueryCounter queries(model);
    const Tensor clean = queries.forward(x).logits;
    if (is_adversarial(clean.data(), y)) return already_misclassified(x, queries.forwards());

    AttackResult result;
    if (cfg.budget_k == 0) {
        result.forwards = queries.forwards();
        return result;
    }

    std::mt19937_64 rng(cfg.seed);
    std::bernoulli_distribution coin(0.5);
    std::vector<std::size_t> coords(d);
    const std::size_t trials = cfg.steps * (cfg.restarts + 1);
    Tensor candidate = x;
    for (std::size_t trial = 1; trial <= trials; ++trial) {
        // Partial Fisher-Yates: the first k entries are a uniform k-subset.
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        for (std::size_t j = 0; j < cfg.budget_k; ++j) {
            std::uniform_int_distribution<std::size_t> pick(j, d - 1);
            std::swap(coords[j], coords[pick(rng)]);
        }
        candidate = x;
        for (std::size_t j = 0; j < cfg.budget_k; ++j) {
            candidate[coords[j]] = coin(rng) ? 1.0 : 0.0;
        }
        if (is_adversarial(queries.forward(candidate).logits.data(), y)) {
            Tensor delta(x.shape());
            for (std::size_t j = 0; j < cfg.budget_k; ++j) {
                const std::size_t c = coords[j];
                delta[c] = box_delta(x[c], candidate[c]);
            }
            result.iterations_to_first_adv = trial;
            result.early_stopped = trial < trials;
            if (verify_adversarial(model, x, y, delta)) {
                result.l0_star = delta.count_nonzero();
                result.best_history.push_back(*result.l0_star);
                result.delta_star = std::move(delta);
            }
            break;
        }
    }
    result.forwards = queries.forwards();
    return result;
}

AttackResult run_baseline(const Model& model, const Tensor& x, std::size_t y,
                          const BaselineConfig& cfg) {
    return cfg.kind == BaselineKind::TopKPGD ? topk_pgd(model, x, y, cfg)
                                             : random_sparse(model, x, y, cfg);
}

}  // namespace szero
