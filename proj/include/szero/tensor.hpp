#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace szero {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major array of doubles.
///
/// The invariant product(shape) == data.size() is enforced by every
/// constructor and by reshape().
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    /// Rank-1 tensor from a list of values.
    static Tensor vector(std::vector<double> values);

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t rank() const { return shape_.size(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    const std::vector<double>& values() const { return data_; }

    /// Same data viewed under a new shape with the same element count.
    Tensor reshaped(Shape shape) const;
    void reshape(Shape shape);

    bool all_finite() const;
    double max_abs() const;

    /// Number of components that are not exactly 0.0.
    std::size_t count_nonzero() const;

    Tensor& operator+=(const Tensor& other);
    Tensor& operator-=(const Tensor& other);
    Tensor& operator*=(double scale);

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

Tensor operator+(Tensor lhs, const Tensor& rhs);
Tensor operator-(Tensor lhs, const Tensor& rhs);
Tensor operator*(double scale, Tensor t);

/// Index of the largest element; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace szero
