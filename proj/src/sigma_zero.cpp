#include "szero/sigma_zero.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "szero/errors.hpp"

namespace szero {

void AttackConfig::validate() const {
    if (steps < 1) throw ConfigError("steps must be >= 1");
    if (!(eta0 > 0.0)) throw ConfigError("eta0 must be > 0");
    if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
    if (!(tau0 >= 0.0 && tau0 <= 1.0)) throw ConfigError("tau0 must lie in [0, 1]");
    if (!(t >= 0.0)) throw ConfigError("t must be >= 0");
}

double smooth_l0(const Tensor& v, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
    double sum = 0.0;
    for (double vi : v.data()) {
        const double sq = vi * vi;
        sum += sq / (sq + sigma);
    }
    return sum;
}

Tensor smooth_l0_grad(const Tensor& v, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
    Tensor g(v.shape());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double denom = v[i] * v[i] + sigma;
        g[i] = 2.0 * v[i] * sigma / (denom * denom);
    }
    return g;
}

void project_tau_inplace(Tensor& delta, double tau) {
    for (double& v : delta.data()) {
        if (std::abs(v) < tau) v = 0.0;
    }
}

Tensor project_tau(const Tensor& delta, double tau) {
    Tensor out = delta;
    project_tau_inplace(out, tau);
    return out;
}

Tensor normalize_grad(const Tensor& g) {
    const double m = g.max_abs();
    if (m < 1e-12) return g;
    Tensor out = g;
    for (double& v : out.data()) v /= m;
    return out;
}

double cosine_step(double eta0, std::size_t i, std::size_t total) {
    if (total == 0 || i > total) throw ConfigError("cosine_step needs 1 <= i <= N");
    if (i == total) return 0.0;
    const double phase = std::numbers::pi * static_cast<double>(i) / static_cast<double>(total);
    return eta0 * (1.0 + std::cos(phase)) / 2.0;
}

AttackResult sigma_zero_attack(const Model& model, const Tensor& x_in, std::size_t y,
                               const AttackConfig& cfg) {
    cfg.validate();
    validate_sample(model, x_in, y);
    const Tensor x = x_in.reshaped(model.input_shape());
    const double inv_d = 1.0 / static_cast<double>(x.size());

    QueryCounter queries(model);
    AttackResult result;

    Tensor delta(x.shape());
    ForwardResult fwd = queries.forward(x);
    if (is_adversarial(fwd.logits.data(), y)) {
        result.delta_star = delta;
        result.l0_star = 0;
        result.iterations_to_first_adv = 0;
        result.best_history.push_back(0);
        result.forwards = queries.forwards();
        return result;
    }

    double tau = cfg.tau0;
    double eta = cfg.eta0;
    std::optional<Tensor> best;
    std::optional<std::size_t> best_l0;

    for (std::size_t i = 1; i <= cfg.steps; ++i) {
        // Gradient of L(x + delta) + l0_hat(delta) / d at the current iterate.
        const Tensor dlogits = adversarial_loss_grad(fwd.logits.data(), y);
        Tensor g = queries.backward_input(fwd.tape, dlogits);
        const Tensor gl0 = smooth_l0_grad(delta, cfg.sigma);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += inv_d * gl0[j];
        if (!g.all_finite()) {
            throw NumericError("non-finite gradient at iteration " + std::to_string(i));
        }
        if (cfg.grad_normalization) g = normalize_grad(g);

        box_step(x, delta, g, eta);
        if (cfg.projection) project_tau_inplace(delta, tau);
        eta = cosine_step(cfg.eta0, i, cfg.steps);

        fwd = queries.forward(x + delta);
        const double loss = adversarial_loss(fwd.logits.data(), y);
        const bool adversarial = loss == 0.0;
        if (cfg.adaptive_tau) {
            tau = std::clamp(adversarial ? tau + cfg.t * eta : tau - cfg.t * eta, 0.0, 1.0);
        }

        const std::size_t l0 = delta.count_nonzero();
        if (adversarial) {
            if (!result.iterations_to_first_adv) result.iterations_to_first_adv = i;
            if (!best_l0 || l0 < *best_l0) {
                best = delta;
                best_l0 = l0;
                result.best_history.push_back(l0);
            }
        }
        if (cfg.record_trace) {
            result.trace.push_back({i, loss, smooth_l0(delta, cfg.sigma), l0, tau, eta, adversarial});
        }
        if (cfg.budget_k && best_l0 && *best_l0 <= *cfg.budget_k) {
            result.early_stopped = i < cfg.steps;
            break;
        }
    }

    result.forwards = queries.forwards();
    result.backwards = queries.backwards();

    // Post-hoc check of the stored witness; this forward is not a query.
    if (best && verify_adversarial(model, x, y, *best)) {
        result.delta_star = std::move(best);
        result.l0_star = best_l0;
    }
    return result;
}

}  // namespace szero
