#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace maskfdia {

/// Dense row-major array of 64-bit reals with an explicit shape.
///
/// Used for parameters, batches and windows alike. Rank-1 tensors behave as a
/// single row for rows()/cols().
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
        return Tensor({rows, cols}, fill);
    }
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    std::size_t rows() const;
    std::size_t cols() const;

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    const std::vector<double>& storage() const { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

    std::span<double> row(std::size_t r) { return {values_.data() + r * cols(), cols()}; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols(), cols()}; }

    void fill(double v);
    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.values_ == b.values_;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

/// Product of the dimensions of a shape.
std::size_t element_count(const std::vector<std::size_t>& shape);

}  // namespace maskfdia
