#include "maskfdia/tensor.hpp"

#include "maskfdia/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace maskfdia {

std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), values_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != element_count(shape_)) {
        throw DimensionError("tensor: " + std::to_string(values_.size()) +
                             " values do not fill shape of " +
                             std::to_string(element_count(shape_)) + " elements");
    }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> values;
    values.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("tensor: ragged initializer rows");
        values.insert(values.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(values));
}

std::size_t Tensor::rows() const {
    if (shape_.empty()) return 0;
    if (shape_.size() == 1) return 1;
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (shape_.empty()) return 0;
    if (shape_.size() == 1) return shape_[0];
    return element_count(shape_) / shape_[0];
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace maskfdia
