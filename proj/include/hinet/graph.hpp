#pragma once
/// @file graph.hpp
/// Reverse-mode autodiff on a per-step tape.
///
/// A Graph records op nodes in creation order; backward() seeds the loss node
/// and replays the tape in reverse, so creation order doubles as a valid
/// topological order.  Parameter nodes live outside the tape and persist
/// across steps; their gradients accumulate until explicitly zeroed.

#include <functional>
#include <memory>
#include <vector>

#include "hinet/tensor.hpp"

namespace hinet {

struct Node;
using NodeRef = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;  // empty until a consumer writes into it
    bool requires_grad = false;
    std::vector<NodeRef> inputs;
    std::function<void()> backward;

    /// Allocates a zero gradient on first use.
    Tensor& ensure_grad() {
        if (grad.empty()) grad = Tensor::zeros(value.shape());
        return grad;
    }
};

class Graph {
public:
    /// training: batch-norm uses batch statistics and updates running buffers.
    /// record: ops keep inputs and backward closures; off for pure inference.
    explicit Graph(bool training = true, bool record = true)
        : training_(training), record_(record) {}

    bool training() const { return training_; }
    bool recording() const { return record_; }

    /// Graph input or constant; never on the tape.
    NodeRef leaf(Tensor value, bool requires_grad = false) {
        auto n = std::make_shared<Node>();
        n->value = std::move(value);
        n->requires_grad = requires_grad;
        return n;
    }

    /// Persistent trainable leaf, shared between graphs.
    static NodeRef param(Tensor value) {
        auto n = std::make_shared<Node>();
        n->value = std::move(value);
        n->requires_grad = true;
        return n;
    }

    /// Registers an op result node.  Ops call this after computing `value`.
    NodeRef track(NodeRef n) {
        if (record_) tape_.push_back(n);
        return n;
    }

    /// Reverse sweep from a scalar loss; gradients accumulate into leaves.
    void backward(const NodeRef& loss);

    /// Drops the tape (and with it all activation storage).
    void clear() { tape_.clear(); }
    size_t tape_size() const { return tape_.size(); }

private:
    std::vector<NodeRef> tape_;
    bool training_;
    bool record_;
};

// --- elementwise and shape ops -------------------------------------------------

NodeRef relu(Graph& g, const NodeRef& x);
NodeRef leaky_relu(Graph& g, const NodeRef& x, double slope);
NodeRef tanh_act(Graph& g, const NodeRef& x);
NodeRef sigmoid(Graph& g, const NodeRef& x);
NodeRef add(Graph& g, const NodeRef& a, const NodeRef& b);
NodeRef mul(Graph& g, const NodeRef& a, const NodeRef& b);
/// Elementwise max; gradient follows the larger input, ties go to `a`.
NodeRef maximum(Graph& g, const NodeRef& a, const NodeRef& b);
NodeRef concat_channels(Graph& g, const std::vector<NodeRef>& xs);
NodeRef maxpool2x2(Graph& g, const NodeRef& x);
NodeRef upsample2x_nearest(Graph& g, const NodeRef& x);
/// Value copy that blocks gradient flow.
NodeRef detach(Graph& g, const NodeRef& x);

// --- convolution and batch norm ------------------------------------------------

/// 2-d convolution, kernel 3x3, weight layout (out_ch, in_ch, 3, 3).
/// stride 1 uses shifted-gemm over padded planes; stride 2 uses im2col.
NodeRef conv2d(Graph& g, const NodeRef& x, const NodeRef& w, const NodeRef& b, int stride,
               int pad);

/// Batch norm over (n, h, w) per channel.  Training mode normalizes by biased
/// batch variance and updates running buffers with unbiased variance
/// (running = (1-momentum)*running + momentum*batch); eval mode uses the
/// running buffers.
NodeRef batchnorm2d(Graph& g, const NodeRef& x, const NodeRef& gamma, const NodeRef& beta,
                    Tensor& running_mean, Tensor& running_var, double momentum, double eps);

// --- scalar-producing losses (double accumulation) -----------------------------

/// mean |a - b| over all elements.
NodeRef l1_mean(Graph& g, const NodeRef& a, const NodeRef& b);

/// Binary cross-entropy half-terms on sigmoid scores in [0, 1]:
/// target_real: mean -log(clamp(s));  otherwise: mean -log(clamp(1 - s)).
/// clamp keeps scores in [eps, 1 - eps] so the value is always finite.
NodeRef bce_term(Graph& g, const NodeRef& score, bool target_real, double eps);

// --- scalar arithmetic ---------------------------------------------------------

NodeRef scalar_const(Graph& g, double v);
NodeRef scalar_add(Graph& g, const NodeRef& a, const NodeRef& b);
NodeRef scalar_scale(Graph& g, const NodeRef& a, double k);

inline double scalar_value(const NodeRef& n) { return static_cast<double>(n->value[0]); }

}  // namespace hinet
