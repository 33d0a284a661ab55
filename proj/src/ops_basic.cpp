#include <cmath>

#include "hinet/graph.hpp"

namespace hinet {

namespace {

// Statically dispatched so the per-element calls inline.
template <typename Fwd, typename Dydx>
NodeRef unary_op(Graph& g, const NodeRef& x, Fwd fwd, Dydx dydx) {
    auto out = std::make_shared<Node>();
    out->value = Tensor::zeros(x->value.shape());
    const int64_t n = x->value.size();
    for (int64_t i = 0; i < n; ++i) out->value[i] = fwd(x->value[i]);
    if (!g.recording()) return out;
    out->requires_grad = x->requires_grad;
    out->inputs = {x};
    if (out->requires_grad) {
        NodeRef xi = x;
        Node* o = out.get();
        out->backward = [xi, o, dydx, n]() {
            Tensor& gx = xi->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                gx[i] += o->grad[i] * dydx(xi->value[i], o->value[i]);
        };
    }
    return g.track(out);
}

}  // namespace

NodeRef relu(Graph& g, const NodeRef& x) {
    return unary_op(
        g, x, [](float v) { return v > 0.0f ? v : 0.0f; },
        [](float v, float) { return v > 0.0f ? 1.0f : 0.0f; });
}

NodeRef leaky_relu(Graph& g, const NodeRef& x, double slope) {
    const float s = static_cast<float>(slope);
    return unary_op(
        g, x, [s](float v) { return v > 0.0f ? v : s * v; },
        [s](float v, float) { return v > 0.0f ? 1.0f : s; });
}

NodeRef tanh_act(Graph& g, const NodeRef& x) {
    return unary_op(
        g, x, [](float v) { return std::tanh(v); }, [](float, float y) { return 1.0f - y * y; });
}

NodeRef sigmoid(Graph& g, const NodeRef& x) {
    return unary_op(
        g, x, [](float v) { return 1.0f / (1.0f + std::exp(-v)); },
        [](float, float y) { return y * (1.0f - y); });
}

namespace {

enum class BinKind { Add, Mul, Max };

NodeRef binary_op(Graph& g, const NodeRef& a, const NodeRef& b, BinKind kind) {
    check_same_shape(a->value, b->value, "elementwise op");
    auto out = std::make_shared<Node>();
    out->value = Tensor::zeros(a->value.shape());
    const int64_t n = a->value.size();
    for (int64_t i = 0; i < n; ++i) {
        const float av = a->value[i], bv = b->value[i];
        switch (kind) {
            case BinKind::Add: out->value[i] = av + bv; break;
            case BinKind::Mul: out->value[i] = av * bv; break;
            case BinKind::Max: out->value[i] = av >= bv ? av : bv; break;
        }
    }
    if (!g.recording()) return out;
    out->requires_grad = a->requires_grad || b->requires_grad;
    out->inputs = {a, b};
    if (out->requires_grad) {
        NodeRef ai = a, bi = b;
        Node* o = out.get();
        out->backward = [ai, bi, o, kind, n]() {
            switch (kind) {
                case BinKind::Add:
                    if (ai->requires_grad) {
                        Tensor& ga = ai->ensure_grad();
                        for (int64_t i = 0; i < n; ++i) ga[i] += o->grad[i];
                    }
                    if (bi->requires_grad) {
                        Tensor& gb = bi->ensure_grad();
                        for (int64_t i = 0; i < n; ++i) gb[i] += o->grad[i];
                    }
                    break;
                case BinKind::Mul:
                    if (ai->requires_grad) {
                        Tensor& ga = ai->ensure_grad();
                        for (int64_t i = 0; i < n; ++i) ga[i] += o->grad[i] * bi->value[i];
                    }
                    if (bi->requires_grad) {
                        Tensor& gb = bi->ensure_grad();
                        for (int64_t i = 0; i < n; ++i) gb[i] += o->grad[i] * ai->value[i];
                    }
                    break;
                case BinKind::Max:
                    // Ties route the gradient to the first argument.
                    if (ai->requires_grad) {
                        Tensor& ga = ai->ensure_grad();
                        for (int64_t i = 0; i < n; ++i)
                            if (ai->value[i] >= bi->value[i]) ga[i] += o->grad[i];
                    }
                    if (bi->requires_grad) {
                        Tensor& gb = bi->ensure_grad();
                        for (int64_t i = 0; i < n; ++i)
                            if (ai->value[i] < bi->value[i]) gb[i] += o->grad[i];
                    }
                    break;
            }
        };
    }
    return g.track(out);
}

}  // namespace

NodeRef add(Graph& g, const NodeRef& a, const NodeRef& b) { return binary_op(g, a, b, BinKind::Add); }
NodeRef mul(Graph& g, const NodeRef& a, const NodeRef& b) { return binary_op(g, a, b, BinKind::Mul); }
NodeRef maximum(Graph& g, const NodeRef& a, const NodeRef& b) {
    return binary_op(g, a, b, BinKind::Max);
}

NodeRef concat_channels(Graph& g, const std::vector<NodeRef>& xs) {
    HINET_CHECK(!xs.empty(), DimensionError, "concat needs at least one input");
    const auto& s0 = xs[0]->value.shape();
    HINET_CHECK(s0.size() == 4, DimensionError, "concat expects 4-d tensors");
    int total_c = 0;
    for (const auto& x : xs) {
        const auto& s = x->value.shape();
        HINET_CHECK(s.size() == 4 && s[0] == s0[0] && s[2] == s0[2] && s[3] == s0[3],
                    DimensionError, "concat inputs disagree: ", xs[0]->value.shape_str(), " vs ",
                    x->value.shape_str());
        total_c += s[1];
    }
    const int n = s0[0], h = s0[2], w = s0[3];
    const int64_t hw = static_cast<int64_t>(h) * w;
    auto out = std::make_shared<Node>();
    out->value = Tensor::zeros({n, total_c, h, w});
    for (int ni = 0; ni < n; ++ni) {
        int64_t dst_c = 0;
        for (const auto& x : xs) {
            const int c = x->value.dim(1);
            const float* src = x->value.data() + static_cast<int64_t>(ni) * c * hw;
            float* dst = out->value.data() + (static_cast<int64_t>(ni) * total_c + dst_c) * hw;
            std::copy(src, src + static_cast<int64_t>(c) * hw, dst);
            dst_c += c;
        }
    }
    if (!g.recording()) return out;
    for (const auto& x : xs) out->requires_grad = out->requires_grad || x->requires_grad;
    out->inputs = xs;
    if (out->requires_grad) {
        std::vector<NodeRef> ins = xs;
        Node* o = out.get();
        out->backward = [ins, o, n, total_c, hw]() {
            for (int ni = 0; ni < n; ++ni) {
                int64_t src_c = 0;
                for (const auto& x : ins) {
                    const int c = x->value.dim(1);
                    if (x->requires_grad) {
                        Tensor& gx = x->ensure_grad();
                        const float* src =
                            o->grad.data() + (static_cast<int64_t>(ni) * total_c + src_c) * hw;
                        float* dst = gx.data() + static_cast<int64_t>(ni) * c * hw;
                        for (int64_t i = 0; i < c * hw; ++i) dst[i] += src[i];
                    }
                    src_c += c;
                }
            }
        };
    }
    return g.track(out);
}

NodeRef maxpool2x2(Graph& g, const NodeRef& x) {
    const auto& s = x->value.shape();
    HINET_CHECK(s.size() == 4, DimensionError, "maxpool expects 4-d input");
    HINET_CHECK(s[2] % 2 == 0 && s[3] % 2 == 0, DimensionError,
                "maxpool2x2 needs even spatial dims, got ", x->value.shape_str());
    const int n = s[0], c = s[1], h = s[2], w = s[3];
    const int ho = h / 2, wo = w / 2;
    auto out = std::make_shared<Node>();
    out->value = Tensor::zeros({n, c, ho, wo});
    auto argmax = std::make_shared<std::vector<int64_t>>(out->value.size());
    const Tensor& xv = x->value;
    int64_t oi = 0;
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci) {
            const int64_t base = (static_cast<int64_t>(ni) * c + ci) * h * w;
            for (int i = 0; i < ho; ++i)
                for (int j = 0; j < wo; ++j, ++oi) {
                    // Fixed scan order keeps tie-breaking deterministic.
                    int64_t best = base + static_cast<int64_t>(2 * i) * w + 2 * j;
                    float bv = xv[best];
                    const int64_t cand[3] = {best + 1, best + w, best + w + 1};
                    for (int64_t idx : cand)
                        if (xv[idx] > bv) {
                            bv = xv[idx];
                            best = idx;
                        }
                    out->value[oi] = bv;
                    (*argmax)[static_cast<size_t>(oi)] = best;
                }
        }
    if (!g.recording()) return out;
    out->requires_grad = x->requires_grad;
    out->inputs = {x};
    if (out->requires_grad) {
        NodeRef xi = x;
        Node* o = out.get();
        out->backward = [xi, o, argmax]() {
            Tensor& gx = xi->ensure_grad();
            const int64_t m = o->value.size();
            for (int64_t i = 0; i < m; ++i) gx[(*argmax)[static_cast<size_t>(i)]] += o->grad[i];
        };
    }
    return g.track(out);
}

NodeRef upsample2x_nearest(Graph& g, const NodeRef& x) {
    const auto& s = x->value.shape();
    HINET_CHECK(s.size() == 4, DimensionError, "upsample expects 4-d input");
    const int n = s[0], c = s[1], h = s[2], w = s[3];
    auto out = std::make_shared<Node>();
    out->value = Tensor::zeros({n, c, 2 * h, 2 * w});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci) {
            const float* src =
                x->value.data() + (static_cast<int64_t>(ni) * c + ci) * h * w;
            float* dst =
                out->value.data() + (static_cast<int64_t>(ni) * c + ci) * 4 * h * w;
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    const float v = src[static_cast<int64_t>(i) * w + j];
                    float* d = dst + (static_cast<int64_t>(2 * i) * 2 * w + 2 * j);
                    d[0] = v;
                    d[1] = v;
                    d[2 * w] = v;
                    d[2 * w + 1] = v;
                }
        }
    if (!g.recording()) return out;
    out->requires_grad = x->requires_grad;
    out->inputs = {x};
    if (out->requires_grad) {
        NodeRef xi = x;
        Node* o = out.get();
        out->backward = [xi, o, n, c, h, w]() {
            Tensor& gx = xi->ensure_grad();
            for (int ni = 0; ni < n; ++ni)
                for (int ci = 0; ci < c; ++ci) {
                    float* dst = gx.data() + (static_cast<int64_t>(ni) * c + ci) * h * w;
                    const float* src =
                        o->grad.data() + (static_cast<int64_t>(ni) * c + ci) * 4 * h * w;
                    for (int i = 0; i < h; ++i)
                        for (int j = 0; j < w; ++j) {
                            const float* sp = src + (static_cast<int64_t>(2 * i) * 2 * w + 2 * j);
                            dst[static_cast<int64_t>(i) * w + j] +=
                                sp[0] + sp[1] + sp[2 * w] + sp[2 * w + 1];
                        }
                }
        };
    }
    return g.track(out);
}

NodeRef detach(Graph& g, const NodeRef& x) { return g.leaf(x->value, false); }

}  // namespace hinet
