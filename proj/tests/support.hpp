#pragma once

// Shared fixtures and reference oracles for the test suites. Nothing here
// calls the library's own gradient code; finite differences and exhaustive
// enumeration are computed from forward passes only.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "szero/dataset.hpp"
#include "szero/model.hpp"
#include "szero/train.hpp"

namespace szero::test {

inline std::string data_dir() { return SZERO_DATA_DIR; }

inline Dataset mnist_train() {
    return load_idx(data_dir() + "/train-images-idx3-ubyte", data_dir() + "/train-labels-idx1-ubyte");
}

inline Dataset mnist_test() {
    return load_idx(data_dir() + "/test-images-idx3-ubyte", data_dir() + "/test-labels-idx1-ubyte");
}

// 784-64-10 MLP, 5 epochs, seed 42: the desk-scale model used by the attack
// suites. Training is sequential, so the weights are identical on every run.
inline TrainResult desk_mlp() {
    const Model tmpl = make_mlp({784, 64, 10});
    TrainOptions opts;
    opts.epochs = 5;
    opts.lr = 0.02;
    opts.batch_size = 1;
    opts.seed = 42;
    const Dataset tr = mnist_train();
    const Dataset te = mnist_test();
    return train(tmpl, tr, &te, opts);
}

inline Tensor uniform_tensor(Shape shape, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = u(rng);
    return t;
}

inline void randomize_parameters(Model& model, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    for (Tensor* p : model.parameters()) {
        for (double& v : p->data()) v = n(rng);
    }
}

// Random MLP or small CNN with random parameters.
inline Model random_model(std::mt19937_64& rng, bool allow_conv = true) {
    std::uniform_int_distribution<int> pick(0, allow_conv ? 2 : 1);
    std::uniform_int_distribution<std::size_t> width(2, 8);
    Model m;
    switch (pick(rng)) {
        case 0:
            m = make_mlp({width(rng), width(rng), width(rng)});
            break;
        case 1:
            m = make_mlp({width(rng), width(rng), width(rng), width(rng)});
            break;
        default: {
            const std::size_t c = 1 + rng() % 2, h = 4 + rng() % 3, w = 4 + rng() % 3, f = 2 + rng() % 2;
            const std::size_t ho = (h - 2) / 2 + 1, wo = (w - 2) / 2 + 1;
            std::vector<Layer> layers{Conv2D{Tensor({f, c, 3, 3}), Tensor({f}), 1, 1}, ReLU{},
                                      MaxPool2D{2, 2}, Flatten{},
                                      Dense{Tensor({3, f * ho * wo}), Tensor({3})}};
            m = Model({c, h, w}, std::move(layers));
        }
    }
    randomize_parameters(m, rng, 0.7);
    return m;
}

inline double dot(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Central finite difference of phi = <c, f(x)> with respect to x. Returns
// nullopt when one-sided differences disagree, i.e. the stencil straddles a
// ReLU or max-pool kink and no derivative exists there.
inline std::optional<Tensor> fd_input_grad(const Model& m, const Tensor& x, const Tensor& c, double h = 1e-5) {
    Tensor g(x.shape());
    const double f0 = dot(c, m.predict(x));
    for (std::size_t i = 0; i < x.size(); ++i) {
        Tensor xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double fp = dot(c, m.predict(xp));
        const double fm = dot(c, m.predict(xm));
        const double right = (fp - f0) / h, left = (f0 - fm) / h;
        if (std::abs(right - left) > 1e-6 * std::max({1.0, std::abs(right), std::abs(left)})) return std::nullopt;
        g[i] = (fp - fm) / (2 * h);
    }
    return g;
}

// Same oracle with respect to every parameter, in Model::parameters() order.
inline std::optional<std::vector<Tensor>> fd_param_grad(Model m, const Tensor& x, const Tensor& c,
                                                        double h = 1e-5) {
    std::vector<Tensor> out;
    const double f0 = dot(c, m.predict(x));
    for (Tensor* p : m.parameters()) {
        Tensor g(p->shape());
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double keep = (*p)[i];
            (*p)[i] = keep + h;
            const double fp = dot(c, m.predict(x));
            (*p)[i] = keep - h;
            const double fm = dot(c, m.predict(x));
            (*p)[i] = keep;
            const double right = (fp - f0) / h, left = (f0 - fm) / h;
            if (std::abs(right - left) > 1e-6 * std::max({1.0, std::abs(right), std::abs(left)})) {
                return std::nullopt;
            }
            g[i] = (fp - fm) / (2 * h);
        }
        out.push_back(std::move(g));
    }
    return out;
}

// Relative error with an absolute floor for components that are zero up to
// rounding on both sides.
inline double rel_err(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale < 1e-8) return std::abs(a - b) < 1e-7 ? 0.0 : 1.0;
    return std::abs(a - b) / scale;
}

inline double max_rel_err(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], b[i]));
    return worst;
}

// Random linear classifier on [0,1]^d with a point labelled by the model's
// own prediction, for oracle comparisons.
struct LinearInstance {
    Model model;
    Tensor x;
    std::size_t y = 0;
};

inline LinearInstance random_linear_instance(std::mt19937_64& rng, std::size_t d, std::size_t classes) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<std::vector<double>> w(classes, std::vector<double>(d));
    std::vector<double> b(classes);
    for (auto& row : w) {
        for (double& v : row) v = n(rng);
    }
    for (double& v : b) v = 0.3 * n(rng);
    Model m = make_linear(w, b);
    Tensor x = uniform_tensor({d}, rng);
    const std::size_t y = m.classify(x);
    return {std::move(m), std::move(x), y};
}

}  // namespace szero::test
