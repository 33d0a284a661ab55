#include <cmath>
#include <cstring>
#include <memory>

#include "hinet/blas.hpp"
#include "hinet/graph.hpp"

namespace hinet {

namespace {

// Stride-1 3x3 convolution as nine shifted gemms over zero-padded planes.
//
// Each channel row of the canvas holds every sample's (H+2) x (W+2) padded
// plane back to back, with the image at rows 1..H, cols 1..W of its plane.
// For flat offset q in the span [q0, q0 + L) with q0 = W+3 and
// L = (N-1)*plane + (H-1)*(W+2) + W, every shifted read q + du*(W+2) + dv
// stays inside the same channel row: the worst case lands in a neighboring
// plane's zeroed border, never outside the row.  One gemm per tap covers
// the whole batch; span cells outside image interiors compute junk that is
// never read back, which also lets output canvases start uninitialized.

struct CanvasDims {
    int hp, wp;
    int64_t plane;  // one sample's padded plane
    int64_t q0;
    int64_t span;   // gemm width covering all samples
};

CanvasDims canvas_dims(int n, int h, int w) {
    CanvasDims d;
    d.hp = h + 2;
    d.wp = w + 2;
    d.plane = static_cast<int64_t>(d.hp) * d.wp;
    d.q0 = d.wp + 1;
    d.span = static_cast<int64_t>(n - 1) * d.plane + static_cast<int64_t>(h - 1) * d.wp + w;
    return d;
}

using Scratch = std::shared_ptr<float[]>;

Scratch alloc_scratch(int64_t count) {
    return Scratch(new float[static_cast<size_t>(count)]);
}

/// Copies dense (n, c, h, w) data into channel-major (c, n, hp, wp) canvases
/// with zeroed one-pixel borders.  Only the borders are cleared; interiors
/// are fully overwritten.
Scratch make_canvas(const float* x, int n, int c, int h, int w, const CanvasDims& d) {
    Scratch canvas = alloc_scratch(static_cast<int64_t>(c) * n * d.plane);
    for (int ci = 0; ci < c; ++ci)
        for (int ni = 0; ni < n; ++ni) {
            const float* src = x + (static_cast<int64_t>(ni) * c + ci) * h * w;
            float* pl = canvas.get() + (static_cast<int64_t>(ci) * n + ni) * d.plane;
            std::memset(pl, 0, sizeof(float) * static_cast<size_t>(d.wp));
            std::memset(pl + static_cast<int64_t>(d.hp - 1) * d.wp, 0,
                        sizeof(float) * static_cast<size_t>(d.wp));
            for (int i = 0; i < h; ++i) {
                float* row = pl + static_cast<int64_t>(i + 1) * d.wp;
                row[0] = 0.0f;
                row[d.wp - 1] = 0.0f;
                std::memcpy(row + 1, src + static_cast<int64_t>(i) * w,
                            sizeof(float) * static_cast<size_t>(w));
            }
        }
    return canvas;
}

/// Repacks (co, ci, 3, 3) weights into nine (co x ci) tap matrices; transposed
/// variant gives nine (ci x co) matrices for the input gradient.
std::vector<float> pack_taps(const Tensor& w, bool transpose) {
    const int co = w.dim(0), ci = w.dim(1);
    std::vector<float> packed(static_cast<size_t>(9) * co * ci);
    for (int k = 0; k < 9; ++k)
        for (int o = 0; o < co; ++o)
            for (int i = 0; i < ci; ++i) {
                const float v = w[((static_cast<int64_t>(o) * ci + i) * 9) + k];
                packed[static_cast<size_t>(k) * co * ci +
                       (transpose ? static_cast<size_t>(i) * co + o
                                  : static_cast<size_t>(o) * ci + i)] = v;
            }
    return packed;
}

void conv_s1_forward(const float* xp, const std::vector<float>& wpack, const Tensor* bias,
                     int n, int cin, int cout, int h, int w, Tensor& out) {
    const CanvasDims d = canvas_dims(n, h, w);
    const int64_t crow = static_cast<int64_t>(n) * d.plane;
    Scratch yc = alloc_scratch(static_cast<int64_t>(cout) * crow);
    for (int k = 0; k < 9; ++k) {
        const int64_t delta = static_cast<int64_t>(k / 3 - 1) * d.wp + (k % 3 - 1);
        sgemm(false, false, cout, static_cast<int>(d.span), cin, 1.0f,
              wpack.data() + static_cast<size_t>(k) * cout * cin, cin, xp + d.q0 + delta,
              static_cast<int>(crow), k == 0 ? 0.0f : 1.0f, yc.get() + d.q0,
              static_cast<int>(crow));
    }
    for (int ni = 0; ni < n; ++ni)
        for (int co = 0; co < cout; ++co) {
            const float b = bias ? (*bias)[co] : 0.0f;
            const float* src = yc.get() + (static_cast<int64_t>(co) * n + ni) * d.plane + d.q0;
            float* dst = out.data() + (static_cast<int64_t>(ni) * cout + co) * h * w;
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j)
                    dst[static_cast<int64_t>(i) * w + j] =
                        src[static_cast<int64_t>(i) * d.wp + j] + b;
        }
}

// im2col path for stride 2 (kernel 3, pad 1).

int out_dim_s2(int in) { return (in - 1) / 2 + 1; }

void im2col_s2(const float* x, int cin, int h, int w, float* col) {
    const int h2 = out_dim_s2(h), w2 = out_dim_s2(w);
    const int64_t l = static_cast<int64_t>(h2) * w2;
    for (int ci = 0; ci < cin; ++ci)
        for (int u = 0; u < 3; ++u)
            for (int v = 0; v < 3; ++v) {
                float* row = col + (static_cast<int64_t>(ci) * 9 + u * 3 + v) * l;
                for (int i2 = 0; i2 < h2; ++i2) {
                    const int i = 2 * i2 + u - 1;
                    for (int j2 = 0; j2 < w2; ++j2) {
                        const int j = 2 * j2 + v - 1;
                        row[static_cast<int64_t>(i2) * w2 + j2] =
                            (i >= 0 && i < h && j >= 0 && j < w)
                                ? x[(static_cast<int64_t>(ci) * h + i) * w + j]
                                : 0.0f;
                    }
                }
            }
}

void col2im_s2_add(const float* col, int cin, int h, int w, float* gx) {
    const int h2 = out_dim_s2(h), w2 = out_dim_s2(w);
    const int64_t l = static_cast<int64_t>(h2) * w2;
    for (int ci = 0; ci < cin; ++ci)
        for (int u = 0; u < 3; ++u)
            for (int v = 0; v < 3; ++v) {
                const float* row = col + (static_cast<int64_t>(ci) * 9 + u * 3 + v) * l;
                for (int i2 = 0; i2 < h2; ++i2) {
                    const int i = 2 * i2 + u - 1;
                    if (i < 0 || i >= h) continue;
                    for (int j2 = 0; j2 < w2; ++j2) {
                        const int j = 2 * j2 + v - 1;
                        if (j < 0 || j >= w) continue;
                        gx[(static_cast<int64_t>(ci) * h + i) * w + j] +=
                            row[static_cast<int64_t>(i2) * w2 + j2];
                    }
                }
            }
}

}  // namespace

NodeRef conv2d(Graph& g, const NodeRef& x, const NodeRef& w, const NodeRef& b, int stride,
               int pad) {
    const auto& xs = x->value.shape();
    const auto& ws = w->value.shape();
    HINET_CHECK(xs.size() == 4, DimensionError, "conv2d expects 4-d input, got ",
                x->value.shape_str());
    HINET_CHECK(ws.size() == 4 && ws[2] == 3 && ws[3] == 3, DimensionError,
                "conv2d expects 3x3 weights, got ", w->value.shape_str());
    HINET_CHECK(pad == 1, ConfigError, "conv2d supports pad 1 only, got ", pad);
    HINET_CHECK(stride == 1 || stride == 2, ConfigError, "conv2d supports stride 1 or 2, got ",
                stride);
    HINET_CHECK(xs[1] == ws[1], DimensionError, "conv2d channel mismatch: input ",
                x->value.shape_str(), " vs weight ", w->value.shape_str());
    HINET_CHECK(!b || (b->value.ndim() == 1 && b->value.dim(0) == ws[0]), DimensionError,
                "conv2d bias must have one entry per output channel");

    const int n = xs[0], cin = xs[1], h = xs[2], wd = xs[3], cout = ws[0];
    auto out = std::make_shared<Node>();

    if (stride == 1) {
        const CanvasDims d = canvas_dims(n, h, wd);
        const int64_t crow = static_cast<int64_t>(n) * d.plane;
        Scratch xp = make_canvas(x->value.data(), n, cin, h, wd, d);
        const auto wpack = pack_taps(w->value, false);
        out->value = Tensor::zeros({n, cout, h, wd});
        conv_s1_forward(xp.get(), wpack, b ? &b->value : nullptr, n, cin, cout, h, wd,
                        out->value);
        if (!g.recording()) return out;
        out->requires_grad = x->requires_grad || w->requires_grad || (b && b->requires_grad);
        out->inputs = b ? std::vector<NodeRef>{x, w, b} : std::vector<NodeRef>{x, w};
        if (out->requires_grad) {
            NodeRef xi = x, wi = w, bi = b;
            Node* o = out.get();
            out->backward = [xi, wi, bi, o, xp, d, crow, n, cin, cout, h, wd]() {
                Scratch dyc = make_canvas(o->grad.data(), n, cout, h, wd, d);
                if (wi->requires_grad) {
                    // Span columns outside image interiors multiply a zero
                    // output-gradient cell, so one gemm per tap suffices.
                    Tensor& gw = wi->ensure_grad();
                    std::vector<float> slice(static_cast<size_t>(cout) * cin);
                    for (int k = 0; k < 9; ++k) {
                        const int64_t delta = static_cast<int64_t>(k / 3 - 1) * d.wp + (k % 3 - 1);
                        sgemm(false, true, cout, cin, static_cast<int>(d.span), 1.0f,
                              dyc.get() + d.q0, static_cast<int>(crow), xp.get() + d.q0 + delta,
                              static_cast<int>(crow), 0.0f, slice.data(), cin);
                        for (int o2 = 0; o2 < cout; ++o2)
                            for (int i2 = 0; i2 < cin; ++i2)
                                gw[(static_cast<int64_t>(o2) * cin + i2) * 9 + k] +=
                                    slice[static_cast<size_t>(o2) * cin + i2];
                    }
                }
                if (bi && bi->requires_grad) {
                    Tensor& gb = bi->ensure_grad();
                    for (int ni = 0; ni < n; ++ni)
                        for (int co = 0; co < cout; ++co) {
                            const float* src =
                                o->grad.data() + (static_cast<int64_t>(ni) * cout + co) * h * wd;
                            double acc = 0.0;
                            for (int64_t i = 0; i < static_cast<int64_t>(h) * wd; ++i)
                                acc += src[i];
                            gb[co] += static_cast<float>(acc);
                        }
                }
                if (xi->requires_grad) {
                    const auto wpack_t = pack_taps(wi->value, true);
                    Scratch dxc = alloc_scratch(static_cast<int64_t>(cin) * crow);
                    for (int k = 0; k < 9; ++k) {
                        const int64_t delta = static_cast<int64_t>(k / 3 - 1) * d.wp + (k % 3 - 1);
                        sgemm(false, false, cin, static_cast<int>(d.span), cout, 1.0f,
                              wpack_t.data() + static_cast<size_t>(k) * cin * cout, cout,
                              dyc.get() + d.q0 - delta, static_cast<int>(crow),
                              k == 0 ? 0.0f : 1.0f, dxc.get() + d.q0, static_cast<int>(crow));
                    }
                    Tensor& gx = xi->ensure_grad();
                    for (int ci = 0; ci < cin; ++ci)
                        for (int ni = 0; ni < n; ++ni) {
                            const float* src =
                                dxc.get() + (static_cast<int64_t>(ci) * n + ni) * d.plane + d.q0;
                            float* dst =
                                gx.data() + (static_cast<int64_t>(ni) * cin + ci) * h * wd;
                            for (int i = 0; i < h; ++i)
                                for (int j = 0; j < wd; ++j)
                                    dst[static_cast<int64_t>(i) * wd + j] +=
                                        src[static_cast<int64_t>(i) * d.wp + j];
                        }
                }
            };
        }
        return g.track(out);
    }

    // stride 2
    const int h2 = out_dim_s2(h), w2 = out_dim_s2(wd);
    const int64_t l = static_cast<int64_t>(h2) * w2;
    const int kdim = cin * 9;
    out->value = Tensor::zeros({n, cout, h2, w2});
    {
        std::vector<float> col(static_cast<size_t>(kdim) * l);
        for (int ni = 0; ni < n; ++ni) {
            im2col_s2(x->value.data() + static_cast<int64_t>(ni) * cin * h * wd, cin, h, wd,
                      col.data());
            float* outn = out->value.data() + static_cast<int64_t>(ni) * cout * l;
            sgemm(false, false, cout, static_cast<int>(l), kdim, 1.0f, w->value.data(), kdim,
                  col.data(), static_cast<int>(l), 0.0f, outn, static_cast<int>(l));
            if (b)
                for (int co = 0; co < cout; ++co) {
                    const float bv = b->value[co];
                    for (int64_t i = 0; i < l; ++i) outn[static_cast<int64_t>(co) * l + i] += bv;
                }
        }
    }
    if (!g.recording()) return out;
    out->requires_grad = x->requires_grad || w->requires_grad || (b && b->requires_grad);
    out->inputs = b ? std::vector<NodeRef>{x, w, b} : std::vector<NodeRef>{x, w};
    if (out->requires_grad) {
        NodeRef xi = x, wi = w, bi = b;
        Node* o = out.get();
        out->backward = [xi, wi, bi, o, n, cin, cout, h, wd, h2, w2, l, kdim]() {
            std::vector<float> col(static_cast<size_t>(kdim) * l);
            std::vector<float> dw(wi->requires_grad ? static_cast<size_t>(cout) * kdim : 0);
            std::vector<float> dcol(xi->requires_grad ? static_cast<size_t>(kdim) * l : 0);
            for (int ni = 0; ni < n; ++ni) {
                const float* dyn = o->grad.data() + static_cast<int64_t>(ni) * cout * l;
                if (wi->requires_grad || xi->requires_grad)
                    im2col_s2(xi->value.data() + static_cast<int64_t>(ni) * cin * h * wd, cin, h,
                              wd, col.data());
                if (wi->requires_grad)
                    sgemm(false, true, cout, kdim, static_cast<int>(l), 1.0f, dyn,
                          static_cast<int>(l), col.data(), static_cast<int>(l),
                          ni == 0 ? 0.0f : 1.0f, dw.data(), kdim);
                if (xi->requires_grad) {
                    sgemm(true, false, kdim, static_cast<int>(l), cout, 1.0f, wi->value.data(),
                          kdim, dyn, static_cast<int>(l), 0.0f, dcol.data(), static_cast<int>(l));
                    col2im_s2_add(dcol.data(), cin, h, wd,
                                  xi->ensure_grad().data() +
                                      static_cast<int64_t>(ni) * cin * h * wd);
                }
                if (bi && bi->requires_grad) {
                    Tensor& gb = bi->ensure_grad();
                    for (int co = 0; co < cout; ++co) {
                        double acc = 0.0;
                        for (int64_t i = 0; i < l; ++i) acc += dyn[static_cast<int64_t>(co) * l + i];
                        gb[co] += static_cast<float>(acc);
                    }
                }
            }
            if (wi->requires_grad) {
                Tensor& gw = wi->ensure_grad();
                for (int64_t i = 0; i < static_cast<int64_t>(cout) * kdim; ++i) gw[i] += dw[i];
            }
        };
    }
    return g.track(out);
}

NodeRef batchnorm2d(Graph& g, const NodeRef& x, const NodeRef& gamma, const NodeRef& beta,
                    Tensor& running_mean, Tensor& running_var, double momentum, double eps) {
    const auto& s = x->value.shape();
    HINET_CHECK(s.size() == 4, DimensionError, "batchnorm expects 4-d input");
    const int n = s[0], c = s[1], h = s[2], w = s[3];
    HINET_CHECK(gamma->value.size() == c && beta->value.size() == c &&
                    running_mean.size() == c && running_var.size() == c,
                DimensionError, "batchnorm parameter size mismatch for ", c, " channels");
    const int64_t hw = static_cast<int64_t>(h) * w;
    const int64_t m = static_cast<int64_t>(n) * hw;

    auto mean = std::make_shared<std::vector<float>>(c);
    auto invstd = std::make_shared<std::vector<float>>(c);
    const bool use_batch_stats = g.training();
    if (use_batch_stats) {
        HINET_CHECK(m > 1, DimensionError, "batchnorm needs more than one value per channel");
        for (int ci = 0; ci < c; ++ci) {
            double sum = 0.0;
            for (int ni = 0; ni < n; ++ni) {
                const float* p = x->value.data() + (static_cast<int64_t>(ni) * c + ci) * hw;
                for (int64_t i = 0; i < hw; ++i) sum += p[i];
            }
            const double mu = sum / static_cast<double>(m);
            double ss = 0.0;
            for (int ni = 0; ni < n; ++ni) {
                const float* p = x->value.data() + (static_cast<int64_t>(ni) * c + ci) * hw;
                for (int64_t i = 0; i < hw; ++i) {
                    const double d = p[i] - mu;
                    ss += d * d;
                }
            }
            const double var = ss / static_cast<double>(m);
            (*mean)[ci] = static_cast<float>(mu);
            (*invstd)[ci] = static_cast<float>(1.0 / std::sqrt(var + eps));
            const double unbiased = ss / static_cast<double>(m - 1);
            running_mean[ci] =
                static_cast<float>((1.0 - momentum) * running_mean[ci] + momentum * mu);
            running_var[ci] =
                static_cast<float>((1.0 - momentum) * running_var[ci] + momentum * unbiased);
        }
    } else {
        for (int ci = 0; ci < c; ++ci) {
            (*mean)[ci] = running_mean[ci];
            (*invstd)[ci] =
                static_cast<float>(1.0 / std::sqrt(static_cast<double>(running_var[ci]) + eps));
        }
    }

    auto out = std::make_shared<Node>();
    out->value = Tensor::zeros(s);
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci) {
            const float scale = gamma->value[ci] * (*invstd)[ci];
            const float shift = beta->value[ci] - (*mean)[ci] * scale;
            const float* src = x->value.data() + (static_cast<int64_t>(ni) * c + ci) * hw;
            float* dst = out->value.data() + (static_cast<int64_t>(ni) * c + ci) * hw;
            for (int64_t i = 0; i < hw; ++i) dst[i] = scale * src[i] + shift;
        }

    if (!g.recording()) return out;
    out->requires_grad = x->requires_grad || gamma->requires_grad || beta->requires_grad;
    out->inputs = {x, gamma, beta};
    if (out->requires_grad) {
        NodeRef xi = x, gi = gamma, bi = beta;
        Node* o = out.get();
        out->backward = [xi, gi, bi, o, mean, invstd, use_batch_stats, n, c, hw, m]() {
            for (int ci = 0; ci < c; ++ci) {
                const double mu = (*mean)[ci], is = (*invstd)[ci];
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (int ni = 0; ni < n; ++ni) {
                    const int64_t base = (static_cast<int64_t>(ni) * c + ci) * hw;
                    const float* dy = o->grad.data() + base;
                    const float* xv = xi->value.data() + base;
                    for (int64_t i = 0; i < hw; ++i) {
                        sum_dy += dy[i];
                        sum_dy_xhat += dy[i] * ((xv[i] - mu) * is);
                    }
                }
                if (gi->requires_grad) gi->ensure_grad()[ci] += static_cast<float>(sum_dy_xhat);
                if (bi->requires_grad) bi->ensure_grad()[ci] += static_cast<float>(sum_dy);
                if (xi->requires_grad) {
                    Tensor& gx = xi->ensure_grad();
                    const double gs = static_cast<double>(gi->value[ci]) * is;
                    const double mean_dy = sum_dy / static_cast<double>(m);
                    const double mean_dy_xhat = sum_dy_xhat / static_cast<double>(m);
                    for (int ni = 0; ni < n; ++ni) {
                        const int64_t base = (static_cast<int64_t>(ni) * c + ci) * hw;
                        const float* dy = o->grad.data() + base;
                        const float* xv = xi->value.data() + base;
                        float* dst = gx.data() + base;
                        if (use_batch_stats) {
                            for (int64_t i = 0; i < hw; ++i) {
                                const double xhat = (xv[i] - mu) * is;
                                dst[i] += static_cast<float>(
                                    gs * (dy[i] - mean_dy - xhat * mean_dy_xhat));
                            }
                        } else {
                            for (int64_t i = 0; i < hw; ++i)
                                dst[i] += static_cast<float>(gs * dy[i]);
                        }
                    }
                }
            }
        };
    }
    return g.track(out);
}

}  // namespace hinet
