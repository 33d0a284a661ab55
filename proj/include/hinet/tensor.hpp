#pragma once
/// @file tensor.hpp
/// Dense float32 tensor with row-major layout.  Images use NCHW order.

#include <cstdint>
#include <string>
#include <vector>

#include "hinet/common.hpp"

namespace hinet {

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, float value);
    static Tensor from_values(std::vector<int> shape, std::vector<float> values);

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    /// Element access for 4-d tensors (n, c, h, w).
    float& at4(int n, int c, int h, int w) {
        return data_[((static_cast<int64_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    float at4(int n, int c, int h, int w) const {
        return data_[((static_cast<int64_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }

    void fill(float value);
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    /// "2x64x128x128" style rendering for error messages.
    std::string shape_str() const;

    static int64_t shape_numel(const std::vector<int>& shape);

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

/// Throws DimensionError naming `what` unless the shapes match.
void check_same_shape(const Tensor& a, const Tensor& b, const std::string& what);

}  // namespace hinet
