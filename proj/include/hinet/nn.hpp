#pragma once
/// @file nn.hpp
/// Parameter registry and the two trainable layer types.
///
/// Parameters are registered under dotted names ("enc1.s2.conv.weight") in
/// construction order; initialization draws from a single RandomSource in
/// that same order, which makes init deterministic in the seed.

#include <deque>
#include <map>
#include <string>
#include <vector>

#include "hinet/graph.hpp"
#include "hinet/rng.hpp"
#include "hinet/tensor.hpp"

namespace hinet {

/// Stddev for conv weight init; biases start at zero, norm scale at one.
inline constexpr double kInitStddev = 0.02;

struct ParamEntry {
    std::string name;
    NodeRef node;
};

class ParamStore {
public:
    NodeRef add_param(const std::string& name, Tensor init);
    Tensor* add_buffer(const std::string& name, Tensor init);

    const std::vector<ParamEntry>& params() const { return params_; }
    std::vector<std::pair<std::string, Tensor*>> buffers();

    NodeRef find_param(const std::string& name) const;
    Tensor* find_buffer(const std::string& name);
    bool has_param(const std::string& name) const { return param_index_.count(name) > 0; }

    std::vector<std::string> param_names() const;
    int64_t total_param_count() const;

    /// Zeroes gradients of every parameter whose name starts with `prefix`
    /// (empty prefix selects all).
    void zero_grads(const std::string& prefix = "");

private:
    std::vector<ParamEntry> params_;
    std::deque<std::pair<std::string, Tensor>> buffers_;  // deque: stable pointers
    std::map<std::string, size_t> param_index_;
    std::map<std::string, size_t> buffer_index_;
};

/// 3x3 convolution layer; weights N(0, 0.02), bias zero.  Layers feeding a
/// batch norm are built without bias: the normalization would cancel the
/// shift exactly, leaving a parameter with no gradient.
struct Conv2d {
    NodeRef w, b;  // b stays null for bias-free layers
    int stride = 1;
    int pad = 1;

    Conv2d() = default;
    Conv2d(ParamStore& store, const std::string& prefix, int in_ch, int out_ch, int stride,
           RandomSource& rng, bool bias = true);

    NodeRef forward(Graph& g, const NodeRef& x) const;
};

/// Batch norm layer; scale one, shift zero, running mean zero, running var one.
struct BatchNorm2d {
    NodeRef gamma, beta;
    Tensor* running_mean = nullptr;
    Tensor* running_var = nullptr;
    double momentum = 0.1;
    double eps = 1e-5;

    BatchNorm2d() = default;
    BatchNorm2d(ParamStore& store, const std::string& prefix, int channels, double momentum,
                double eps);

    NodeRef forward(Graph& g, const NodeRef& x) const;
};

}  // namespace hinet
