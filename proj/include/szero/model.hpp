#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "szero/tensor.hpp"

namespace szero {

/// y = W x + b with W of shape [out, in] and rank-1 input.
struct Dense {
    Tensor weight;
    Tensor bias;
};

struct ReLU {};

/// Zero-padded 2-D convolution over [C, H, W] inputs.
/// weight: [out_channels, in_channels, kernel, kernel], bias: [out_channels].
struct Conv2D {
    Tensor weight;
    Tensor bias;
    std::size_t stride = 1;
    std::size_t padding = 0;
};

/// [C, H, W] -> [C*H*W].
struct Flatten {};

/// Max pooling over [C, H, W] without padding.
struct MaxPool2D {
    std::size_t kernel = 2;
    std::size_t stride = 2;
};

using Layer = std::variant<Dense, ReLU, Conv2D, Flatten, MaxPool2D>;

std::string layer_kind(const Layer& layer);

/// Precision the parameters were stored with before loading. Computation is
/// always carried out in 64-bit.
enum class StorageDtype { F64, F32 };

class GradientTape;

struct ForwardResult;

struct Gradients {
    Tensor input;
    /// One entry per trainable parameter, in Model::parameters() order.
    std::vector<Tensor> params;
};

/// Ordered layer chain mapping an input of `input_shape` to a rank-1 logit
/// vector. Immutable through its const interface, so a single instance can
/// be shared by concurrent attacks.
class Model {
public:
    Model() = default;
    Model(Shape input_shape, std::vector<Layer> layers);

    const Shape& input_shape() const { return input_shape_; }
    std::size_t input_size() const { return shape_size(input_shape_); }
    std::size_t num_classes() const { return num_classes_; }
    const std::vector<Layer>& layers() const { return layers_; }
    const std::vector<Shape>& output_shapes() const { return output_shapes_; }

    StorageDtype storage_dtype() const { return storage_dtype_; }
    void set_storage_dtype(StorageDtype dtype) { storage_dtype_ = dtype; }

    /// Weight and bias tensors of every parametrized layer, in layer order.
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::size_t parameter_count() const;

    /// Logits plus the activations needed for a single backward pass.
    ForwardResult forward(const Tensor& x) const;

    /// Logits only.
    Tensor predict(const Tensor& x) const;
    std::size_t classify(const Tensor& x) const;

    Gradients backward(GradientTape& tape, const Tensor& dlogits, bool want_input,
                       bool want_params) const;
    Tensor backward_input(GradientTape& tape, const Tensor& dlogits) const;
    std::vector<Tensor> backward_params(GradientTape& tape, const Tensor& dlogits) const;

private:
    Shape input_shape_;
    std::vector<Layer> layers_;
    std::vector<Shape> output_shapes_;
    std::size_t num_classes_ = 0;
    StorageDtype storage_dtype_ = StorageDtype::F64;
};

/// Activations recorded by Model::forward. Valid for exactly one backward
/// call; a second call raises StateError.
class GradientTape {
public:
    GradientTape() = default;
    GradientTape(GradientTape&&) noexcept = default;
    GradientTape& operator=(GradientTape&&) noexcept = default;
    GradientTape(const GradientTape&) = delete;
    GradientTape& operator=(const GradientTape&) = delete;

    bool consumed() const { return consumed_; }

private:
    friend class Model;

    const Model* owner_ = nullptr;
    // inputs_[i] is the input of layer i.
    std::vector<Tensor> inputs_;
    // Flat argmax index per pooled output, for MaxPool2D layers only.
    std::vector<std::vector<std::size_t>> pool_argmax_;
    bool consumed_ = true;
};

struct ForwardResult {
    Tensor logits;
    GradientTape tape;
};

/// Wraps a model and counts forward/backward queries issued through it.
class QueryCounter {
public:
    explicit QueryCounter(const Model& model) : model_(model) {}

    ForwardResult forward(const Tensor& x) {
        ++forwards_;
        return model_.forward(x);
    }

    Tensor backward_input(GradientTape& tape, const Tensor& dlogits) {
        ++backwards_;
        return model_.backward_input(tape, dlogits);
    }

    const Model& model() const { return model_; }
    std::size_t forwards() const { return forwards_; }
    std::size_t backwards() const { return backwards_; }

private:
    const Model& model_;
    std::size_t forwards_ = 0;
    std::size_t backwards_ = 0;
};

/// Dense/ReLU chain with the given layer widths, parameters zero-filled.
/// make_mlp({784, 64, 10}) -> Dense(784->64), ReLU, Dense(64->10).
Model make_mlp(const std::vector<std::size_t>& widths);

/// Single Dense layer with the given weight rows and bias.
Model make_linear(const std::vector<std::vector<double>>& weight, std::vector<double> bias);

}  // namespace szero
