#include "szero/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "szero/errors.hpp"

namespace szero {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
        throw ConfigError("tensor shape " + shape_to_string(shape_) + " does not match " +
                          std::to_string(data_.size()) + " elements");
    }
}

Tensor Tensor::vector(std::vector<double> values) {
    Shape shape{values.size()};
    return Tensor(std::move(shape), std::move(values));
}

Tensor Tensor::reshaped(Shape shape) const {
    Tensor out = *this;
    out.reshape(std::move(shape));
    return out;
}

void Tensor::reshape(Shape shape) {
    if (shape_size(shape) != data_.size()) {
        throw ConfigError("cannot reshape " + shape_to_string(shape_) + " to " +
                          shape_to_string(shape));
    }
    shape_ = std::move(shape);
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double Tensor::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

std::size_t Tensor::count_nonzero() const {
    std::size_t n = 0;
    for (double v : data_) n += (v != 0.0);
    return n;
}

Tensor& Tensor::operator+=(const Tensor& other) {
    if (other.shape_ != shape_) throw ConfigError("tensor += shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
    if (other.shape_ != shape_) throw ConfigError("tensor -= shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(double scale) {
    for (double& v : data_) v *= scale;
    return *this;
}

Tensor operator+(Tensor lhs, const Tensor& rhs) { return lhs += rhs; }
Tensor operator-(Tensor lhs, const Tensor& rhs) { return lhs -= rhs; }
Tensor operator*(double scale, Tensor t) { return t *= scale; }

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

}  // namespace szero
