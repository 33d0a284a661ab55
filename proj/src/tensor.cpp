#include "hinet/tensor.hpp"

#include <cmath>

namespace hinet {

int64_t Tensor::shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
        HINET_CHECK(d > 0, DimensionError, "tensor dimension must be positive, got ", d);
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0f);
}

Tensor Tensor::full(std::vector<int> shape, float value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<float> values) {
    Tensor t;
    t.shape_ = std::move(shape);
    HINET_CHECK(shape_numel(t.shape_) == static_cast<int64_t>(values.size()), DimensionError,
                "value count ", values.size(), " does not fill shape ", t.shape_str());
    t.data_ = std::move(values);
    return t;
}

void Tensor::fill(float value) {
    for (auto& v : data_) v = value;
}

bool Tensor::all_finite() const {
    for (float v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    std::string s;
    for (size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(shape_[i]);
    }
    return s.empty() ? "scalar" : s;
}

void check_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
    HINET_CHECK(a.same_shape(b), DimensionError, what, ": shape mismatch ", a.shape_str(), " vs ",
                b.shape_str());
}

}  // namespace hinet
