#include <cmath>

#include "hinet/graph.hpp"

namespace hinet {

NodeRef l1_mean(Graph& g, const NodeRef& a, const NodeRef& b) {
    check_same_shape(a->value, b->value, "l1_mean");
    const int64_t n = a->value.size();
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i)
        acc += std::abs(static_cast<double>(a->value[i]) - static_cast<double>(b->value[i]));
    auto out = std::make_shared<Node>();
    out->value = Tensor::from_values({1}, {static_cast<float>(acc / static_cast<double>(n))});
    if (!g.recording()) return out;
    out->requires_grad = a->requires_grad || b->requires_grad;
    out->inputs = {a, b};
    if (out->requires_grad) {
        NodeRef ai = a, bi = b;
        Node* o = out.get();
        out->backward = [ai, bi, o, n]() {
            const float go = o->grad[0] / static_cast<float>(n);
            for (int64_t i = 0; i < n; ++i) {
                const float d = ai->value[i] - bi->value[i];
                // sign(0) = 0: the subgradient at the kink.
                const float s = d > 0.0f ? go : (d < 0.0f ? -go : 0.0f);
                if (ai->requires_grad) ai->ensure_grad()[i] += s;
                if (bi->requires_grad) bi->ensure_grad()[i] -= s;
            }
        };
    }
    return g.track(out);
}

NodeRef bce_term(Graph& g, const NodeRef& score, bool target_real, double eps) {
    HINET_CHECK(eps > 0.0 && eps < 0.5, ConfigError, "bce clamp eps out of range: ", eps);
    const int64_t n = score->value.size();
    const double lo = eps, hi = 1.0 - eps;
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(score->value[i]);
        HINET_CHECK(std::isfinite(s) && s >= 0.0 && s <= 1.0, NumericError,
                    "bce_term expects scores in [0,1], got ", s);
        const double c = s < lo ? lo : (s > hi ? hi : s);
        acc += -std::log(target_real ? c : 1.0 - c);
    }
    auto out = std::make_shared<Node>();
    out->value = Tensor::from_values({1}, {static_cast<float>(acc / static_cast<double>(n))});
    if (!g.recording()) return out;
    out->requires_grad = score->requires_grad;
    out->inputs = {score};
    if (out->requires_grad) {
        NodeRef si = score;
        Node* o = out.get();
        out->backward = [si, o, target_real, lo, hi, n]() {
            Tensor& gs = si->ensure_grad();
            const float go = o->grad[0] / static_cast<float>(n);
            for (int64_t i = 0; i < n; ++i) {
                const float s = si->value[i];
                // The clamp has zero slope outside [lo, hi].
                if (s < static_cast<float>(lo) || s > static_cast<float>(hi)) continue;
                gs[i] += target_real ? -go / s : go / (1.0f - s);
            }
        };
    }
    return g.track(out);
}

NodeRef scalar_const(Graph& g, double v) {
    return g.leaf(Tensor::from_values({1}, {static_cast<float>(v)}), false);
}

NodeRef scalar_add(Graph& g, const NodeRef& a, const NodeRef& b) {
    HINET_CHECK(a->value.size() == 1 && b->value.size() == 1, DimensionError,
                "scalar_add expects scalars");
    auto out = std::make_shared<Node>();
    out->value = Tensor::from_values({1}, {a->value[0] + b->value[0]});
    if (!g.recording()) return out;
    out->requires_grad = a->requires_grad || b->requires_grad;
    out->inputs = {a, b};
    if (out->requires_grad) {
        NodeRef ai = a, bi = b;
        Node* o = out.get();
        out->backward = [ai, bi, o]() {
            if (ai->requires_grad) ai->ensure_grad()[0] += o->grad[0];
            if (bi->requires_grad) bi->ensure_grad()[0] += o->grad[0];
        };
    }
    return g.track(out);
}

NodeRef scalar_scale(Graph& g, const NodeRef& a, double k) {
    HINET_CHECK(a->value.size() == 1, DimensionError, "scalar_scale expects a scalar");
    auto out = std::make_shared<Node>();
    out->value = Tensor::from_values({1}, {static_cast<float>(k * a->value[0])});
    if (!g.recording()) return out;
    out->requires_grad = a->requires_grad;
    out->inputs = {a};
    if (out->requires_grad) {
        NodeRef ai = a;
        Node* o = out.get();
        out->backward = [ai, o, k]() {
            if (ai->requires_grad) ai->ensure_grad()[0] += static_cast<float>(k) * o->grad[0];
        };
    }
    return g.track(out);
}

}  // namespace hinet
