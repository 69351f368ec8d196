#include "isal/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "isal/errors.hpp"

namespace isal {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
    for (std::size_t e : shape_) {
        if (e == 0) throw InvalidConfig("tensor extents must be positive, got " + shape_to_string(shape_));
    }
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
        throw InvalidConfig("tensor shape " + shape_to_string(shape_) + " does not match data length " +
                            std::to_string(data_.size()));
    }
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= shape_.size()) throw IndexOutOfRange("tensor axis " + std::to_string(axis) + " out of range");
    return shape_[axis];
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> idx) const {
    assert(idx.size() == shape_.size());
    std::size_t off = 0;
    std::size_t axis = 0;
    for (std::size_t i : idx) {
        assert(i < shape_[axis]);
        off = off * shape_[axis] + i;
        ++axis;
    }
    return off;
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
    if (shape_product(shape) != data_.size()) {
        throw ShapeMismatch("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

double Tensor::min() const {
    return *std::min_element(data_.begin(), data_.end());
}

double Tensor::max() const {
    return *std::max_element(data_.begin(), data_.end());
}

double Tensor::sum() const {
    return std::accumulate(data_.begin(), data_.end(), 0.0);
}

void assert_finite(const Tensor& t, const char* context) {
    for (double v : t.flat()) {
        if (!std::isfinite(v)) {
            throw InternalError(std::string("non-finite value produced by ") + context);
        }
    }
}

}  // namespace isal
