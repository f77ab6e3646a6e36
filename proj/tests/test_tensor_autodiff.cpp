#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "szero/errors.hpp"
#include "szero/model.hpp"
#include "szero/train.hpp"

using namespace szero;
using szero::test::fd_input_grad;
using szero::test::fd_param_grad;
using szero::test::max_rel_err;

namespace {

Model relu_only(std::size_t d) {
    return Model({d}, {ReLU{}, Dense{Tensor({2, d}, {1, 0, 0, 1}), Tensor({2})}});
}

}  // namespace

TEST(Tensor, ShapeMustMatchData) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ConfigError);
    Tensor t({2, 3}, 1.5);
    EXPECT_EQ(t.size(), 6u);
    EXPECT_THROW(t.reshape({4}), ConfigError);
    t.reshape({3, 2});
    EXPECT_EQ(t.shape(), (Shape{3, 2}));
}

TEST(Tensor, CountNonzeroIsExact) {
    Tensor t = Tensor::vector({0.0, -0.0, 1e-300, 2.0});
    EXPECT_EQ(t.count_nonzero(), 2u);
}

TEST(Tensor, ArgmaxTiesGoToLowestIndex) {
    const std::vector<double> v{1.0, 3.0, 3.0, 2.0};
    EXPECT_EQ(argmax(v), 1u);
    const std::vector<double> same{0.5, 0.5};
    EXPECT_EQ(argmax(same), 0u);
}

TEST(Forward, IdentityDense) {
    Model m = make_linear({{1, 0}, {0, 1}}, {0, 0});
    const Tensor logits = m.predict(Tensor::vector({0.3, 0.7}));
    EXPECT_EQ(logits.values(), (std::vector<double>{0.3, 0.7}));
}

TEST(Forward, SingleRelu) {
    // ReLU followed by an identity read-out.
    Model m = relu_only(2);
    EXPECT_EQ(m.predict(Tensor::vector({-1, 2})).values(), (std::vector<double>{0, 2}));
}

TEST(Forward, MlpOnZeroInputPropagatesBiases) {
    Model m = make_mlp({5, 4, 3});
    init_parameters(m, 42);
    std::mt19937_64 rng(42);
    auto params = m.parameters();
    // init_parameters leaves biases at zero; give them values worth checking.
    for (Tensor* b : {params[1], params[3]}) {
        for (double& v : b->data()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    }
    const Tensor& w2 = *params[2];
    const Tensor& b1 = *params[1];
    const Tensor& b2 = *params[3];
    std::vector<double> expect(3);
    for (std::size_t o = 0; o < 3; ++o) {
        double acc = b2[o];
        for (std::size_t i = 0; i < 4; ++i) acc += w2[o * 4 + i] * std::max(b1[i], 0.0);
        expect[o] = acc;
    }
    const Tensor logits = m.predict(Tensor({5}));
    for (std::size_t o = 0; o < 3; ++o) EXPECT_DOUBLE_EQ(logits[o], expect[o]);
}

TEST(Forward, DeterministicAndReshapesInput) {
    std::mt19937_64 rng(3);
    Model m = test::random_model(rng);
    const Tensor x = test::uniform_tensor(m.input_shape(), rng);
    EXPECT_EQ(m.predict(x), m.predict(x));
    const Tensor flat = x.reshaped({x.size()});
    EXPECT_EQ(m.predict(flat), m.predict(x));
}

TEST(Forward, WrongInputSizeIsConfigError) {
    Model m = make_linear({{1, 0}, {0, 1}}, {0, 0});
    EXPECT_THROW(m.predict(Tensor::vector({1, 2, 3})), ConfigError);
}

TEST(Forward, NonFiniteInputRejected) {
    Model m = make_linear({{1, 0}, {0, 1}}, {0, 0});
    EXPECT_THROW(m.predict(Tensor::vector({std::nan(""), 0})), NumericError);
}

TEST(Forward, NonFiniteActivationNamesLayer) {
    Model m = make_linear({{1e300, 0}, {0, 1}}, {0, 0});
    try {
        m.predict(Tensor::vector({1e300, 0}));
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("Dense"), std::string::npos) << e.what();
    }
}

TEST(Model, RejectsInconsistentChains) {
    EXPECT_THROW(Model({3}, {Dense{Tensor({2, 4}), Tensor({2})}}), ConfigError);
    EXPECT_THROW(Model({3}, {Dense{Tensor({1, 3}), Tensor({1})}}), ConfigError);  // one class
    EXPECT_THROW(Model({3}, {MaxPool2D{2, 2}}), ConfigError);
}

TEST(Model, LinearInInput) {
    // Dense chains without ReLU are affine: f(a+b) - f(0) = (f(a)-f(0)) + (f(b)-f(0)).
    std::mt19937_64 rng(11);
    Model m = make_mlp({4, 3});
    test::randomize_parameters(m, rng);
    const Tensor a = test::uniform_tensor({4}, rng), b = test::uniform_tensor({4}, rng);
    const Tensor z({4});
    const Tensor lhs = m.predict(a + b) - m.predict(z);
    const Tensor rhs = (m.predict(a) - m.predict(z)) + (m.predict(b) - m.predict(z));
    for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-12);
}

TEST(Backward, IdentityDenseTransposes) {
    Model m = make_linear({{1, 0}, {0, 1}}, {0, 0});
    auto fwd = m.forward(Tensor::vector({0.3, 0.7}));
    EXPECT_EQ(m.backward_input(fwd.tape, Tensor::vector({1, 0})).values(), (std::vector<double>{1, 0}));
}

TEST(Backward, ReluSubgradient) {
    Model m = relu_only(2);
    auto fwd = m.forward(Tensor::vector({-1, 2}));
    EXPECT_EQ(m.backward_input(fwd.tape, Tensor::vector({5, 5})).values(), (std::vector<double>{0, 5}));
}

TEST(Backward, ReluGradientAtZeroIsZero) {
    Model m = relu_only(2);
    auto fwd = m.forward(Tensor::vector({0, 1}));
    EXPECT_EQ(m.backward_input(fwd.tape, Tensor::vector({1, 1})).values(), (std::vector<double>{0, 1}));
}

TEST(Backward, DenseWeightGradientIsOuterProduct) {
    Model m = make_linear({{0.5, -0.5}, {0, 0}}, {0, 0});
    auto fwd = m.forward(Tensor::vector({1, 2}));
    const auto g = m.backward_params(fwd.tape, Tensor::vector({1, 0}));
    ASSERT_EQ(g.size(), 2u);
    EXPECT_EQ(g[0].values(), (std::vector<double>{1, 2, 0, 0}));
    EXPECT_EQ(g[1].values(), (std::vector<double>{1, 0}));
}

TEST(Backward, BiasGradientEqualsUpstream) {
    std::mt19937_64 rng(5);
    Model m = make_mlp({3, 4});
    test::randomize_parameters(m, rng);
    auto fwd = m.forward(test::uniform_tensor({3}, rng));
    const Tensor up = Tensor::vector({0.1, -2, 3, 0.25});
    EXPECT_EQ(m.backward_params(fwd.tape, up)[1].values(), up.values());
}

TEST(Backward, TapeIsSingleUse) {
    Model m = make_linear({{1, 0}, {0, 1}}, {0, 0});
    auto fwd = m.forward(Tensor::vector({0.3, 0.7}));
    m.backward_input(fwd.tape, Tensor::vector({1, 0}));
    EXPECT_TRUE(fwd.tape.consumed());
    EXPECT_THROW(m.backward_input(fwd.tape, Tensor::vector({1, 0})), StateError);
    GradientTape empty;
    EXPECT_THROW(m.backward_input(empty, Tensor::vector({1, 0})), StateError);
}

TEST(Backward, TapeBelongsToItsModel) {
    Model a = make_linear({{1, 0}, {0, 1}}, {0, 0});
    Model b = make_linear({{1, 0}, {0, 1}}, {0, 0});
    auto fwd = a.forward(Tensor::vector({0.3, 0.7}));
    EXPECT_THROW(b.backward_input(fwd.tape, Tensor::vector({1, 0})), StateError);
}

TEST(Backward, UpstreamShapeChecked) {
    Model m = make_linear({{1, 0}, {0, 1}}, {0, 0});
    auto fwd = m.forward(Tensor::vector({0.3, 0.7}));
    EXPECT_THROW(m.backward_input(fwd.tape, Tensor::vector({1, 0, 0})), ConfigError);
}

TEST(Backward, MaxPoolRoutesToFirstMaximum) {
    // Single 2x2 window with a tie: gradient goes to the first row-major max.
    Model m({1, 2, 2}, {MaxPool2D{2, 2}, Flatten{}, Dense{Tensor({2, 1}, {1, -1}), Tensor({2})}});
    auto fwd = m.forward(Tensor({1, 2, 2}, {0.2, 0.9, 0.9, 0.1}));
    const Tensor g = m.backward_input(fwd.tape, Tensor::vector({1, 0}));
    EXPECT_EQ(g.values(), (std::vector<double>{0, 1, 0, 0}));
}

// Finite-difference agreement over random MLPs and CNNs. Inputs whose
// stencil straddles a kink are resampled.
TEST(GradientProperty, InputGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(2024);
    std::size_t checked = 0, resampled = 0;
    while (checked < 100) {
        const Model m = test::random_model(rng);
        const Tensor x = test::uniform_tensor(m.input_shape(), rng);
        const Tensor c = test::uniform_tensor({m.num_classes()}, rng, -1, 1);
        const auto fd = fd_input_grad(m, x, c);
        if (!fd) {
            ++resampled;
            continue;
        }
        auto fwd = m.forward(x);
        const Tensor g = m.backward_input(fwd.tape, c);
        EXPECT_LT(max_rel_err(g, *fd), 1e-4) << "case " << checked;
        ++checked;
    }
    EXPECT_LT(resampled, 50u);
}

TEST(GradientProperty, ParameterGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(77);
    std::size_t checked = 0;
    while (checked < 30) {
        const Model m = test::random_model(rng);
        const Tensor x = test::uniform_tensor(m.input_shape(), rng);
        const Tensor c = test::uniform_tensor({m.num_classes()}, rng, -1, 1);
        const auto fd = fd_param_grad(m, x, c);
        if (!fd) continue;
        auto fwd = m.forward(x);
        const auto g = m.backward_params(fwd.tape, c);
        ASSERT_EQ(g.size(), fd->size());
        for (std::size_t p = 0; p < g.size(); ++p) EXPECT_LT(max_rel_err(g[p], (*fd)[p]), 1e-4);
        ++checked;
    }
}

TEST(QueryCounter, CountsForwardAndBackward) {
    Model m = make_linear({{1, 0}, {0, 1}}, {0, 0});
    QueryCounter q(m);
    auto fwd = q.forward(Tensor::vector({0.3, 0.7}));
    q.forward(Tensor::vector({0.3, 0.7}));
    q.backward_input(fwd.tape, Tensor::vector({1, 0}));
    EXPECT_EQ(q.forwards(), 2u);
    EXPECT_EQ(q.backwards(), 1u);
}
