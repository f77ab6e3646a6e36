#include "szero/model.hpp"

#include <cmath>
#include <limits>

#include "szero/errors.hpp"

namespace szero {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string where(std::size_t index, const Layer& layer) {
    return "layer " + std::to_string(index) + " (" + layer_kind(layer) + ")";
}

std::size_t conv_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                        std::size_t padding) {
    return (in + 2 * padding - kernel) / stride + 1;
}

Shape infer_output(std::size_t index, const Layer& layer, const Shape& in) {
    return std::visit(
        Overloaded{
            [&](const Dense& d) -> Shape {
                if (d.weight.rank() != 2 || d.bias.rank() != 1 ||
                    d.bias.size() != d.weight.shape()[0]) {
                    throw ConfigError(where(index, layer) + ": weight must be [out,in], bias [out]");
                }
                if (in.size() != 1 || in[0] != d.weight.shape()[1]) {
                    throw ConfigError(where(index, layer) + ": expects input [" +
                                      std::to_string(d.weight.shape()[1]) + "], got " +
                                      shape_to_string(in));
                }
                return {d.weight.shape()[0]};
            },
            [&](const ReLU&) -> Shape { return in; },
            [&](const Flatten&) -> Shape { return {shape_size(in)}; },
            [&](const Conv2D& c) -> Shape {
                const Shape& w = c.weight.shape();
                if (w.size() != 4 || w[2] != w[3] || c.bias.rank() != 1 || c.bias.size() != w[0]) {
                    throw ConfigError(where(index, layer) +
                                      ": weight must be [out,in,k,k], bias [out]");
                }
                if (c.stride < 1) throw ConfigError(where(index, layer) + ": stride must be >= 1");
                if (in.size() != 3 || in[0] != w[1]) {
                    throw ConfigError(where(index, layer) + ": expects [" + std::to_string(w[1]) +
                                      ",H,W] input, got " + shape_to_string(in));
                }
                if (in[1] + 2 * c.padding < w[2] || in[2] + 2 * c.padding < w[2]) {
                    throw ConfigError(where(index, layer) + ": kernel larger than padded input");
                }
                return {w[0], conv_extent(in[1], w[2], c.stride, c.padding),
                        conv_extent(in[2], w[2], c.stride, c.padding)};
            },
            [&](const MaxPool2D& p) -> Shape {
                if (p.stride < 1 || p.kernel < 1) {
                    throw ConfigError(where(index, layer) + ": kernel and stride must be >= 1");
                }
                if (in.size() != 3 || in[1] < p.kernel || in[2] < p.kernel) {
                    throw ConfigError(where(index, layer) + ": expects [C,H,W] input of at least "
                                      "kernel size, got " + shape_to_string(in));
                }
                return {in[0], conv_extent(in[1], p.kernel, p.stride, 0),
                        conv_extent(in[2], p.kernel, p.stride, 0)};
            },
        },
        layer);
}

void dense_forward(const Dense& d, const Tensor& x, Tensor& y) {
    const std::size_t out = d.weight.shape()[0];
    const std::size_t in = d.weight.shape()[1];
    const double* w = d.weight.data().data();
    const double* xv = x.data().data();
    for (std::size_t o = 0; o < out; ++o) {
        const double* row = w + o * in;
        double acc = 0.0;
        for (std::size_t i = 0; i < in; ++i) acc += row[i] * xv[i];
        y[o] = acc + d.bias[o];
    }
}

void conv_forward(const Conv2D& c, const Tensor& x, Tensor& y) {
    const Shape& ws = c.weight.shape();
    const std::size_t oc = ws[0], ic = ws[1], k = ws[2];
    const std::size_t h = x.shape()[1], w = x.shape()[2];
    const std::size_t oh = y.shape()[1], ow = y.shape()[2];
    const auto pad = static_cast<std::ptrdiff_t>(c.padding);
    for (std::size_t o = 0; o < oc; ++o) {
        for (std::size_t r = 0; r < oh; ++r) {
            for (std::size_t s = 0; s < ow; ++s) {
                double acc = 0.0;
                for (std::size_t ch = 0; ch < ic; ++ch) {
                    for (std::size_t kr = 0; kr < k; ++kr) {
                        const std::ptrdiff_t ir = static_cast<std::ptrdiff_t>(r * c.stride + kr) - pad;
                        if (ir < 0 || ir >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t kc = 0; kc < k; ++kc) {
                            const std::ptrdiff_t is =
                                static_cast<std::ptrdiff_t>(s * c.stride + kc) - pad;
                            if (is < 0 || is >= static_cast<std::ptrdiff_t>(w)) continue;
                            acc += c.weight[((o * ic + ch) * k + kr) * k + kc] *
                                   x[(ch * h + static_cast<std::size_t>(ir)) * w +
                                     static_cast<std::size_t>(is)];
                        }
                    }
                }
                y[(o * oh + r) * ow + s] = acc + c.bias[o];
            }
        }
    }
}

void conv_backward(const Conv2D& c, const Tensor& x, const Tensor& gy, Tensor* gx, Tensor* gw,
                   Tensor* gb) {
    const Shape& ws = c.weight.shape();
    const std::size_t oc = ws[0], ic = ws[1], k = ws[2];
    const std::size_t h = x.shape()[1], w = x.shape()[2];
    const std::size_t oh = gy.shape()[1], ow = gy.shape()[2];
    const auto pad = static_cast<std::ptrdiff_t>(c.padding);
    for (std::size_t o = 0; o < oc; ++o) {
        for (std::size_t r = 0; r < oh; ++r) {
            for (std::size_t s = 0; s < ow; ++s) {
                const double g = gy[(o * oh + r) * ow + s];
                if (gb) (*gb)[o] += g;
                if (g == 0.0) continue;
                for (std::size_t ch = 0; ch < ic; ++ch) {
                    for (std::size_t kr = 0; kr < k; ++kr) {
                        const std::ptrdiff_t ir = static_cast<std::ptrdiff_t>(r * c.stride + kr) - pad;
                        if (ir < 0 || ir >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t kc = 0; kc < k; ++kc) {
                            const std::ptrdiff_t is =
                                static_cast<std::ptrdiff_t>(s * c.stride + kc) - pad;
                            if (is < 0 || is >= static_cast<std::ptrdiff_t>(w)) continue;
                            const std::size_t wi = ((o * ic + ch) * k + kr) * k + kc;
                            const std::size_t xi = (ch * h + static_cast<std::size_t>(ir)) * w +
                                                   static_cast<std::size_t>(is);
                            if (gx) (*gx)[xi] += c.weight[wi] * g;
                            if (gw) (*gw)[wi] += x[xi] * g;
                        }
                    }
                }
            }
        }
    }
}

void pool_forward(const MaxPool2D& p, const Tensor& x, Tensor& y, std::vector<std::size_t>& arg) {
    const std::size_t ch = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    const std::size_t oh = y.shape()[1], ow = y.shape()[2];
    arg.assign(y.size(), 0);
    for (std::size_t c = 0; c < ch; ++c) {
        for (std::size_t r = 0; r < oh; ++r) {
            for (std::size_t s = 0; s < ow; ++s) {
                std::size_t best = (c * h + r * p.stride) * w + s * p.stride;
                // Row-major scan with strict '>' keeps the first maximum on ties.
                for (std::size_t kr = 0; kr < p.kernel; ++kr) {
                    for (std::size_t kc = 0; kc < p.kernel; ++kc) {
                        const std::size_t idx = (c * h + r * p.stride + kr) * w + s * p.stride + kc;
                        if (x[idx] > x[best]) best = idx;
                    }
                }
                const std::size_t out = (c * oh + r) * ow + s;
                y[out] = x[best];
                arg[out] = best;
            }
        }
    }
}

}  // namespace

std::string layer_kind(const Layer& layer) {
    return std::visit(Overloaded{
                          [](const Dense&) { return std::string("Dense"); },
                          [](const ReLU&) { return std::string("ReLU"); },
                          [](const Conv2D&) { return std::string("Conv2D"); },
                          [](const Flatten&) { return std::string("Flatten"); },
                          [](const MaxPool2D&) { return std::string("MaxPool2D"); },
                      },
                      layer);
}

Model::Model(Shape input_shape, std::vector<Layer> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
    if (input_shape_.empty() || shape_size(input_shape_) == 0) {
        throw ConfigError("model input shape must be non-empty with positive dimensions");
    }
    for (std::size_t d : input_shape_) {
        if (d == 0) throw ConfigError("model input shape has a zero dimension");
    }
    Shape current = input_shape_;
    output_shapes_.reserve(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        current = infer_output(i, layers_[i], current);
        output_shapes_.push_back(current);
    }
    if (current.size() != 1 || current[0] < 2) {
        throw ConfigError("model must end in a logit vector of length >= 2, got " +
                          shape_to_string(current));
    }
    num_classes_ = current[0];
}

std::vector<Tensor*> Model::parameters() {
    std::vector<Tensor*> out;
    for (Layer& layer : layers_) {
        if (auto* d = std::get_if<Dense>(&layer)) {
            out.push_back(&d->weight);
            out.push_back(&d->bias);
        } else if (auto* c = std::get_if<Conv2D>(&layer)) {
            out.push_back(&c->weight);
            out.push_back(&c->bias);
        }
    }
    return out;
}

std::vector<const Tensor*> Model::parameters() const {
    std::vector<const Tensor*> out;
    for (const Layer& layer : layers_) {
        if (const auto* d = std::get_if<Dense>(&layer)) {
            out.push_back(&d->weight);
            out.push_back(&d->bias);
        } else if (const auto* c = std::get_if<Conv2D>(&layer)) {
            out.push_back(&c->weight);
            out.push_back(&c->bias);
        }
    }
    return out;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const Tensor* p : parameters()) n += p->size();
    return n;
}

ForwardResult Model::forward(const Tensor& x) const {
    // Inputs with the right element count are viewed under input_shape.
    if (x.size() != input_size()) {
        throw ConfigError("input shape " + shape_to_string(x.shape()) +
                          " does not match model input " + shape_to_string(input_shape_));
    }
    if (!x.all_finite()) throw NumericError("non-finite value in model input");

    ForwardResult result;
    GradientTape& tape = result.tape;
    tape.owner_ = this;
    tape.consumed_ = false;
    tape.inputs_.reserve(layers_.size());
    tape.pool_argmax_.resize(layers_.size());

    Tensor current = x.shape() == input_shape_ ? x : x.reshaped(input_shape_);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        Tensor next(output_shapes_[i]);
        std::visit(Overloaded{
                       [&](const Dense& d) { dense_forward(d, current, next); },
                       [&](const ReLU&) {
                           for (std::size_t j = 0; j < current.size(); ++j) {
                               next[j] = current[j] > 0.0 ? current[j] : 0.0;
                           }
                       },
                       [&](const Flatten&) { next = current.reshaped(output_shapes_[i]); },
                       [&](const Conv2D& c) { conv_forward(c, current, next); },
                       [&](const MaxPool2D& p) {
                           pool_forward(p, current, next, tape.pool_argmax_[i]);
                       },
                   },
                   layers_[i]);
        if (!next.all_finite()) {
            throw NumericError("non-finite activation at " + where(i, layers_[i]));
        }
        tape.inputs_.push_back(std::move(current));
        current = std::move(next);
    }
    result.logits = std::move(current);
    return result;
}

Tensor Model::predict(const Tensor& x) const { return forward(x).logits; }

std::size_t Model::classify(const Tensor& x) const { return argmax(predict(x).data()); }

Gradients Model::backward(GradientTape& tape, const Tensor& dlogits, bool want_input,
                          bool want_params) const {
    if (tape.consumed_) throw StateError("gradient tape already consumed or never recorded");
    if (tape.owner_ != this) throw StateError("gradient tape was recorded by a different model");
    if (dlogits.size() != num_classes_) {
        throw ConfigError("upstream gradient has " + std::to_string(dlogits.size()) +
                          " entries, model has " + std::to_string(num_classes_) + " classes");
    }
    tape.consumed_ = true;

    Gradients grads;
    std::vector<Tensor> param_grads_rev;
    Tensor upstream = dlogits.reshaped({num_classes_});

    for (std::size_t li = layers_.size(); li-- > 0;) {
        const Tensor& x = tape.inputs_[li];
        // Input gradient is not needed below the first layer unless requested.
        const bool need_dx = li > 0 || want_input;
        Tensor dx(x.shape());
        std::visit(
            Overloaded{
                [&](const Dense& d) {
                    const std::size_t out = d.weight.shape()[0];
                    const std::size_t in = d.weight.shape()[1];
                    if (want_params) {
                        Tensor gw(d.weight.shape());
                        for (std::size_t o = 0; o < out; ++o) {
                            const double g = upstream[o];
                            if (g == 0.0) continue;
                            for (std::size_t i = 0; i < in; ++i) gw[o * in + i] = g * x[i];
                        }
                        param_grads_rev.push_back(upstream);
                        param_grads_rev.push_back(std::move(gw));
                    }
                    if (need_dx) {
                        const double* w = d.weight.data().data();
                        double* dxv = dx.data().data();
                        for (std::size_t o = 0; o < out; ++o) {
                            const double g = upstream[o];
                            if (g == 0.0) continue;
                            const double* row = w + o * in;
                            for (std::size_t i = 0; i < in; ++i) dxv[i] += row[i] * g;
                        }
                    }
                },
                [&](const ReLU&) {
                    for (std::size_t j = 0; j < x.size(); ++j) {
                        dx[j] = x[j] > 0.0 ? upstream[j] : 0.0;
                    }
                },
                [&](const Flatten&) { dx = upstream.reshaped(x.shape()); },
                [&](const Conv2D& c) {
                    Tensor gw(c.weight.shape());
                    Tensor gb(c.bias.shape());
                    conv_backward(c, x, upstream, need_dx ? &dx : nullptr,
                                  want_params ? &gw : nullptr, want_params ? &gb : nullptr);
                    if (want_params) {
                        param_grads_rev.push_back(std::move(gb));
                        param_grads_rev.push_back(std::move(gw));
                    }
                },
                [&](const MaxPool2D&) {
                    const auto& arg = tape.pool_argmax_[li];
                    for (std::size_t j = 0; j < arg.size(); ++j) dx[arg[j]] += upstream[j];
                },
            },
            layers_[li]);
        upstream = std::move(dx);
    }

    if (want_input) {
        if (!upstream.all_finite()) throw NumericError("non-finite input gradient");
        grads.input = std::move(upstream);
    }
    if (want_params) {
        grads.params.assign(std::make_move_iterator(param_grads_rev.rbegin()),
                            std::make_move_iterator(param_grads_rev.rend()));
    }
    tape.inputs_.clear();
    tape.pool_argmax_.clear();
    return grads;
}

Tensor Model::backward_input(GradientTape& tape, const Tensor& dlogits) const {
    return backward(tape, dlogits, true, false).input;
}

std::vector<Tensor> Model::backward_params(GradientTape& tape, const Tensor& dlogits) const {
    return backward(tape, dlogits, false, true).params;
}

Model make_mlp(const std::vector<std::size_t>& widths) {
    if (widths.size() < 2) throw ConfigError("an MLP needs at least input and output widths");
    std::vector<Layer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        if (i > 0) layers.emplace_back(ReLU{});
        layers.emplace_back(Dense{Tensor({widths[i + 1], widths[i]}), Tensor({widths[i + 1]})});
    }
    return Model({widths.front()}, std::move(layers));
}

Model make_linear(const std::vector<std::vector<double>>& weight, std::vector<double> bias) {
    if (weight.empty()) throw ConfigError("linear model needs at least one weight row");
    const std::size_t in = weight.front().size();
    std::vector<double> flat;
    for (const auto& row : weight) {
        if (row.size() != in) throw ConfigError("ragged weight matrix");
        flat.insert(flat.end(), row.begin(), row.end());
    }
    Tensor w({weight.size(), in}, std::move(flat));
    Tensor b = Tensor::vector(std::move(bias));
    return Model({in}, {Dense{std::move(w), std::move(b)}});
}

}  // namespace szero
