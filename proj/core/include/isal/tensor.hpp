#pragma once

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace isal {

// Dense row-major tensor of doubles. Feature maps and images are stored
// channel-major as [channels, height, width].
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double value);

    bool empty() const { return data_.empty(); }
    std::size_t size() const { return data_.size(); }
    std::size_t rank() const { return shape_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t extent(std::size_t axis) const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& flat() { return data_; }
    const std::vector<double>& flat() const { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    template <class... Ix>
    double& operator()(Ix... ix) {
        return data_[offset({static_cast<std::size_t>(ix)...})];
    }
    template <class... Ix>
    double operator()(Ix... ix) const {
        return data_[offset({static_cast<std::size_t>(ix)...})];
    }

    // Row-major flat offset of a full multi-index.
    std::size_t offset(std::initializer_list<std::size_t> idx) const;

    // Same data, new shape; element count must be preserved.
    Tensor reshaped(std::vector<std::size_t> shape) const;

    double min() const;
    double max() const;
    double sum() const;

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

// Throws InternalError if any element is NaN or infinite.
void assert_finite(const Tensor& t, const char* context);

}  // namespace isal
