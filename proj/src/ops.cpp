#include "hazeforge/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "hazeforge/rng.hpp"

namespace hazeforge {

namespace {

using ImplPtr = std::shared_ptr<Tensor::Impl>;

void record_op(const char* name, const std::vector<Tensor>& inputs, Tensor& out,
               std::function<void()> backward) {
    Tape* tape = Tape::active();
    if (!tape) return;
    bool any = false;
    for (const auto& in : inputs)
        if (in.requires_grad()) { any = true; break; }
    if (!any) return;
    out.set_requires_grad(true);
    Tape::Op op;
    op.name = name;
    op.inputs.reserve(inputs.size());
    for (const auto& in : inputs) op.inputs.push_back(in.impl());
    op.output = out.impl();
    op.backward = std::move(backward);
    tape->record(std::move(op));
}

// Valid output positions o for in-position o*stride + off in [0, in_extent).
void conv_range(long long off, long long stride, long long in_extent,
                long long out_extent, long long& lo, long long& hi) {
    lo = off < 0 ? (-off + stride - 1) / stride : 0;
    long long top = in_extent - 1 - off;
    hi = top < 0 ? -1 : std::min(out_extent - 1, top / stride);
}

void require_rank4(const Tensor& t, const char* who) {
    if (t.rank() != 4)
        throw dim_error(std::string(who) + ": expected a 4-D tensor, got shape " + shape_str(t.shape()));
}

struct SpatialView {
    std::size_t lead;  // product of all leading extents
    std::size_t h;
    std::size_t w;
};

SpatialView spatial_view(const Tensor& t, const char* who) {
    if (t.rank() < 2)
        throw dim_error(std::string(who) + ": needs at least 2 dims, got " + shape_str(t.shape()));
    SpatialView v;
    v.h = t.extent(t.rank() - 2);
    v.w = t.extent(t.rank() - 1);
    v.lead = 1;
    for (std::size_t i = 0; i + 2 < t.rank(); ++i) v.lead *= t.extent(i);
    return v;
}

}  // namespace

// --------------------------------------------------------------------------
// conv2d

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding) {
    require_rank4(input, "conv2d input");
    require_rank4(weight, "conv2d weight");
    const std::size_t B = input.extent(0), Ci = input.extent(1);
    const std::size_t H = input.extent(2), W = input.extent(3);
    const std::size_t Co = weight.extent(0);
    const std::size_t k = weight.extent(2);
    if (weight.extent(1) != Ci)
        throw dim_error("conv2d: weight wants " + std::to_string(weight.extent(1)) +
                        " input channels, input has " + std::to_string(Ci));
    if (weight.extent(3) != k) throw dim_error("conv2d: kernel must be square");
    if (k < 1 || stride < 1 || padding < 0) throw dim_error("conv2d: invalid kernel/stride/padding");
    if (bias.rank() != 1 || bias.extent(0) != Co)
        throw dim_error("conv2d: bias must have one value per output channel");
    if (H + 2 * static_cast<std::size_t>(padding) < k || W + 2 * static_cast<std::size_t>(padding) < k)
        throw dim_error("conv2d: padded extent smaller than kernel (input " + shape_str(input.shape()) + ")");

    const std::size_t Ho = (H + 2 * padding - k) / stride + 1;
    const std::size_t Wo = (W + 2 * padding - k) / stride + 1;
    Tensor out = Tensor::zeros({B, Co, Ho, Wo});

    const real* id = input.data();
    const real* wd = weight.data();
    const real* bd = bias.data();
    real* od = out.data();

    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t co = 0; co < Co; ++co) {
            real* plane = od + (b * Co + co) * Ho * Wo;
            std::fill(plane, plane + Ho * Wo, bd[co]);
        }

    const long long s = stride, p = padding;
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t co = 0; co < Co; ++co)
            for (std::size_t ci = 0; ci < Ci; ++ci)
                for (std::size_t u = 0; u < k; ++u)
                    for (std::size_t v = 0; v < k; ++v) {
                        const real wv = wd[((co * Ci + ci) * k + u) * k + v];
                        long long ilo, ihi, jlo, jhi;
                        conv_range(static_cast<long long>(u) - p, s, H, Ho, ilo, ihi);
                        conv_range(static_cast<long long>(v) - p, s, W, Wo, jlo, jhi);
                        if (ihi < ilo || jhi < jlo) continue;
                        for (long long i = ilo; i <= ihi; ++i) {
                            const long long y = i * s + static_cast<long long>(u) - p;
                            const real* irow = id + ((b * Ci + ci) * H + y) * W + (jlo * s + v - p);
                            real* orow = od + ((b * Co + co) * Ho + i) * Wo + jlo;
                            const long long n = jhi - jlo;
                            for (long long j = 0; j <= n; ++j) orow[j] += wv * irow[j * s];
                        }
                    }

    auto xi = input.impl();
    auto wi = weight.impl();
    auto bi = bias.impl();
    auto oi = out.impl();
    record_op("conv2d", {input, weight, bias}, out, [xi, wi, bi, oi, stride, padding, B, Ci, Co, H, W, Ho, Wo, k]() {
        const real* g = oi->grad.data();
        const real* id = xi->data.data();
        const real* wd = wi->data.data();
        const bool need_in = xi->requires_grad;
        const bool need_w = wi->requires_grad;
        const bool need_b = bi->requires_grad;
        const long long s = stride, p = padding;

        if (need_b) {
            real* db = ensure_grad(bi).data();
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t co = 0; co < Co; ++co) {
                    const real* plane = g + (b * Co + co) * Ho * Wo;
                    real acc = 0;
                    for (std::size_t i = 0; i < Ho * Wo; ++i) acc += plane[i];
                    db[co] += acc;
                }
        }
        if (!need_in && !need_w) return;
        real* din = need_in ? ensure_grad(xi).data() : nullptr;
        real* dw = need_w ? ensure_grad(wi).data() : nullptr;

        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t co = 0; co < Co; ++co)
                for (std::size_t ci = 0; ci < Ci; ++ci)
                    for (std::size_t u = 0; u < k; ++u)
                        for (std::size_t v = 0; v < k; ++v) {
                            const std::size_t widx = ((co * Ci + ci) * k + u) * k + v;
                            const real wv = wd[widx];
                            long long ilo, ihi, jlo, jhi;
                            conv_range(static_cast<long long>(u) - p, s, H, Ho, ilo, ihi);
                            conv_range(static_cast<long long>(v) - p, s, W, Wo, jlo, jhi);
                            if (ihi < ilo || jhi < jlo) continue;
                            real dwv = 0;
                            for (long long i = ilo; i <= ihi; ++i) {
                                const long long y = i * s + static_cast<long long>(u) - p;
                                const std::size_t ibase = ((b * Ci + ci) * H + y) * W + (jlo * s + v - p);
                                const real* grow = g + ((b * Co + co) * Ho + i) * Wo + jlo;
                                const long long n = jhi - jlo;
                                if (need_w && need_in) {
                                    const real* irow = id + ibase;
                                    real* drow = din + ibase;
                                    for (long long j = 0; j <= n; ++j) {
                                        const real gv = grow[j];
                                        dwv += gv * irow[j * s];
                                        drow[j * s] += gv * wv;
                                    }
                                } else if (need_w) {
                                    const real* irow = id + ibase;
                                    for (long long j = 0; j <= n; ++j) dwv += grow[j] * irow[j * s];
                                } else {
                                    real* drow = din + ibase;
                                    for (long long j = 0; j <= n; ++j) drow[j * s] += grow[j] * wv;
                                }
                            }
                            if (need_w) dw[widx] += dwv;
                        }
    });
    return out;
}

// --------------------------------------------------------------------------
// transpose_conv2d

Tensor transpose_conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        int stride, int padding) {
    require_rank4(input, "transpose_conv2d input");
    require_rank4(weight, "transpose_conv2d weight");
    const std::size_t B = input.extent(0), Ci = input.extent(1);
    const std::size_t H = input.extent(2), W = input.extent(3);
    if (weight.extent(0) != Ci)
        throw dim_error("transpose_conv2d: weight wants " + std::to_string(weight.extent(0)) +
                        " input channels, input has " + std::to_string(Ci));
    const std::size_t Co = weight.extent(1);
    const std::size_t k = weight.extent(2);
    if (weight.extent(3) != k) throw dim_error("transpose_conv2d: kernel must be square");
    if (k < 1 || stride < 1 || padding < 0)
        throw dim_error("transpose_conv2d: invalid kernel/stride/padding");
    if (bias.rank() != 1 || bias.extent(0) != Co)
        throw dim_error("transpose_conv2d: bias must have one value per output channel");
    const long long Ho_ll = (static_cast<long long>(H) - 1) * stride - 2 * padding + static_cast<long long>(k);
    const long long Wo_ll = (static_cast<long long>(W) - 1) * stride - 2 * padding + static_cast<long long>(k);
    if (Ho_ll < 1 || Wo_ll < 1)
        throw dim_error("transpose_conv2d: output extent would be empty for input " + shape_str(input.shape()));
    const std::size_t Ho = static_cast<std::size_t>(Ho_ll);
    const std::size_t Wo = static_cast<std::size_t>(Wo_ll);

    Tensor out = Tensor::zeros({B, Co, Ho, Wo});
    const real* id = input.data();
    const real* wd = weight.data();
    const real* bd = bias.data();
    real* od = out.data();

    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t co = 0; co < Co; ++co) {
            real* plane = od + (b * Co + co) * Ho * Wo;
            std::fill(plane, plane + Ho * Wo, bd[co]);
        }

    const long long s = stride, p = padding;
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t ci = 0; ci < Ci; ++ci)
            for (std::size_t co = 0; co < Co; ++co)
                for (std::size_t u = 0; u < k; ++u)
                    for (std::size_t v = 0; v < k; ++v) {
                        const real wv = wd[((ci * Co + co) * k + u) * k + v];
                        long long ilo, ihi, jlo, jhi;
                        conv_range(static_cast<long long>(u) - p, s, Ho, H, ilo, ihi);
                        conv_range(static_cast<long long>(v) - p, s, Wo, W, jlo, jhi);
                        if (ihi < ilo || jhi < jlo) continue;
                        for (long long i = ilo; i <= ihi; ++i) {
                            const long long y = i * s + static_cast<long long>(u) - p;
                            const real* irow = id + ((b * Ci + ci) * H + i) * W + jlo;
                            real* orow = od + ((b * Co + co) * Ho + y) * Wo + (jlo * s + v - p);
                            const long long n = jhi - jlo;
                            for (long long j = 0; j <= n; ++j) orow[j * s] += wv * irow[j];
                        }
                    }

    auto xi = input.impl();
    auto wi = weight.impl();
    auto bi = bias.impl();
    auto oi = out.impl();
    record_op("transpose_conv2d", {input, weight, bias}, out,
              [xi, wi, bi, oi, stride, padding, B, Ci, Co, H, W, Ho, Wo, k]() {
        const real* g = oi->grad.data();
        const real* id = xi->data.data();
        const real* wd = wi->data.data();
        const bool need_in = xi->requires_grad;
        const bool need_w = wi->requires_grad;
        const bool need_b = bi->requires_grad;
        const long long s = stride, p = padding;

        if (need_b) {
            real* db = ensure_grad(bi).data();
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t co = 0; co < Co; ++co) {
                    const real* plane = g + (b * Co + co) * Ho * Wo;
                    real acc = 0;
                    for (std::size_t i = 0; i < Ho * Wo; ++i) acc += plane[i];
                    db[co] += acc;
                }
        }
        if (!need_in && !need_w) return;
        real* din = need_in ? ensure_grad(xi).data() : nullptr;
        real* dw = need_w ? ensure_grad(wi).data() : nullptr;

        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t ci = 0; ci < Ci; ++ci)
                for (std::size_t co = 0; co < Co; ++co)
                    for (std::size_t u = 0; u < k; ++u)
                        for (std::size_t v = 0; v < k; ++v) {
                            const std::size_t widx = ((ci * Co + co) * k + u) * k + v;
                            const real wv = wd[widx];
                            long long ilo, ihi, jlo, jhi;
                            conv_range(static_cast<long long>(u) - p, s, Ho, H, ilo, ihi);
                            conv_range(static_cast<long long>(v) - p, s, Wo, W, jlo, jhi);
                            if (ihi < ilo || jhi < jlo) continue;
                            real dwv = 0;
                            for (long long i = ilo; i <= ihi; ++i) {
                                const long long y = i * s + static_cast<long long>(u) - p;
                                const std::size_t ibase = ((b * Ci + ci) * H + i) * W + jlo;
                                const real* grow = g + ((b * Co + co) * Ho + y) * Wo + (jlo * s + v - p);
                                const long long n = jhi - jlo;
                                if (need_w && need_in) {
                                    const real* irow = id + ibase;
                                    real* drow = din + ibase;
                                    for (long long j = 0; j <= n; ++j) {
                                        const real gv = grow[j * s];
                                        dwv += gv * irow[j];
                                        drow[j] += gv * wv;
                                    }
                                } else if (need_w) {
                                    const real* irow = id + ibase;
                                    for (long long j = 0; j <= n; ++j) dwv += grow[j * s] * irow[j];
                                } else {
                                    real* drow = din + ibase;
                                    for (long long j = 0; j <= n; ++j) drow[j] += grow[j * s] * wv;
                                }
                            }
                            if (need_w) dw[widx] += dwv;
                        }
    });
    return out;
}

// --------------------------------------------------------------------------
// batch_norm

Tensor batch_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  Tensor running_mean, Tensor running_var, bool train,
                  real momentum, real eps) {
    require_rank4(input, "batch_norm input");
    const std::size_t B = input.extent(0), C = input.extent(1);
    const std::size_t H = input.extent(2), W = input.extent(3);
    if (gamma.rank() != 1 || gamma.extent(0) != C || beta.rank() != 1 || beta.extent(0) != C)
        throw dim_error("batch_norm: gamma/beta length must equal channel count");
    if (running_mean.numel() != C || running_var.numel() != C)
        throw dim_error("batch_norm: running stats length must equal channel count");
    const std::size_t N = B * H * W;
    if (N == 0 || C == 0) throw dim_error("batch_norm: degenerate input with a zero-element channel");

    Tensor out = Tensor::zeros(input.shape());
    const real* x = input.data();
    const real* gd = gamma.data();
    const real* bd = beta.data();
    real* od = out.data();
    const std::size_t plane = H * W;

    std::vector<real> mean_c(C, 0), invstd_c(C, 0);
    auto xhat = std::make_shared<std::vector<real>>();

    if (train) {
        xhat->assign(input.numel(), real(0));
        for (std::size_t c = 0; c < C; ++c) {
            real sum = 0;
            for (std::size_t b = 0; b < B; ++b) {
                const real* pp = x + (b * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) sum += pp[i];
            }
            const real mu = sum / static_cast<real>(N);
            real var = 0;
            for (std::size_t b = 0; b < B; ++b) {
                const real* pp = x + (b * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const real d = pp[i] - mu;
                    var += d * d;
                }
            }
            var /= static_cast<real>(N);
            const real inv = real(1) / std::sqrt(var + eps);
            mean_c[c] = mu;
            invstd_c[c] = inv;
            running_mean.data()[c] = (real(1) - momentum) * running_mean.data()[c] + momentum * mu;
            running_var.data()[c] = (real(1) - momentum) * running_var.data()[c] + momentum * var;
            for (std::size_t b = 0; b < B; ++b) {
                const real* pp = x + (b * C + c) * plane;
                real* hp = xhat->data() + (b * C + c) * plane;
                real* op = od + (b * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    hp[i] = (pp[i] - mu) * inv;
                    op[i] = gd[c] * hp[i] + bd[c];
                }
            }
        }
    } else {
        for (std::size_t c = 0; c < C; ++c) {
            mean_c[c] = running_mean.data()[c];
            invstd_c[c] = real(1) / std::sqrt(running_var.data()[c] + eps);
        }
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c) {
                const real* pp = x + (b * C + c) * plane;
                real* op = od + (b * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i)
                    op[i] = gd[c] * (pp[i] - mean_c[c]) * invstd_c[c] + bd[c];
            }
    }

    auto xi = input.impl();
    auto gi = gamma.impl();
    auto bi = beta.impl();
    auto oi = out.impl();
    record_op("batch_norm", {input, gamma, beta}, out,
              [xi, gi, bi, oi, xhat, mean_c, invstd_c, train, B, C, plane, N]() {
        const real* g = oi->grad.data();
        const real* gd = gi->data.data();
        const bool need_in = xi->requires_grad;
        const bool need_g = gi->requires_grad;
        const bool need_b = bi->requires_grad;
        real* din = need_in ? ensure_grad(xi).data() : nullptr;
        real* dgamma = need_g ? ensure_grad(gi).data() : nullptr;
        real* dbeta = need_b ? ensure_grad(bi).data() : nullptr;

        if (train) {
            const real* hh = xhat->data();
            for (std::size_t c = 0; c < C; ++c) {
                real sum_g = 0, sum_gh = 0;
                for (std::size_t b = 0; b < B; ++b) {
                    const std::size_t base = (b * C + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i) {
                        sum_g += g[base + i];
                        sum_gh += g[base + i] * hh[base + i];
                    }
                }
                if (need_g) dgamma[c] += sum_gh;
                if (need_b) dbeta[c] += sum_g;
                if (need_in) {
                    const real inv = invstd_c[c];
                    const real gn = gd[c];
                    const real mean_dxhat = sum_g * gn / static_cast<real>(N);
                    const real mean_dxhat_h = sum_gh * gn / static_cast<real>(N);
                    for (std::size_t b = 0; b < B; ++b) {
                        const std::size_t base = (b * C + c) * plane;
                        for (std::size_t i = 0; i < plane; ++i) {
                            const real dxhat = g[base + i] * gn;
                            din[base + i] += inv * (dxhat - mean_dxhat - hh[base + i] * mean_dxhat_h);
                        }
                    }
                }
            }
        } else {
            const real* x = xi->data.data();
            for (std::size_t c = 0; c < C; ++c) {
                const real inv = invstd_c[c];
                const real mu = mean_c[c];
                real sum_g = 0, sum_gh = 0;
                for (std::size_t b = 0; b < B; ++b) {
                    const std::size_t base = (b * C + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i) {
                        sum_g += g[base + i];
                        sum_gh += g[base + i] * (x[base + i] - mu) * inv;
                        if (need_in) din[base + i] += g[base + i] * gd[c] * inv;
                    }
                }
                if (need_g) dgamma[c] += sum_gh;
                if (need_b) dbeta[c] += sum_g;
            }
        }
    });
    return out;
}

// --------------------------------------------------------------------------
// activations

Tensor prelu(const Tensor& input, const Tensor& slope_per_channel) {
    require_rank4(input, "prelu input");
    const std::size_t B = input.extent(0), C = input.extent(1);
    const std::size_t plane = input.extent(2) * input.extent(3);
    if (slope_per_channel.rank() != 1 || slope_per_channel.extent(0) != C)
        throw dim_error("prelu: slope vector length must equal channel count");

    Tensor out = Tensor::zeros(input.shape());
    const real* x = input.data();
    const real* sd = slope_per_channel.data();
    real* od = out.data();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c) {
            const std::size_t base = (b * C + c) * plane;
            const real s = sd[c];
            for (std::size_t i = 0; i < plane; ++i) {
                const real v = x[base + i];
                od[base + i] = v > 0 ? v : s * v;
            }
        }

    auto xi = input.impl();
    auto si = slope_per_channel.impl();
    auto oi = out.impl();
    record_op("prelu", {input, slope_per_channel}, out, [xi, si, oi, B, C, plane]() {
        const real* g = oi->grad.data();
        const real* x = xi->data.data();
        const real* sd = si->data.data();
        const bool need_in = xi->requires_grad;
        const bool need_s = si->requires_grad;
        real* din = need_in ? ensure_grad(xi).data() : nullptr;
        real* ds = need_s ? ensure_grad(si).data() : nullptr;
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c) {
                const std::size_t base = (b * C + c) * plane;
                const real s = sd[c];
                real dsc = 0;
                for (std::size_t i = 0; i < plane; ++i) {
                    const real v = x[base + i];
                    const real gv = g[base + i];
                    if (need_in) din[base + i] += v > 0 ? gv : gv * s;
                    if (v <= 0) dsc += gv * v;
                }
                if (need_s) ds[c] += dsc;
            }
    });
    return out;
}

Tensor tanh_act(const Tensor& input) {
    Tensor out = Tensor::zeros(input.shape());
    const real* x = input.data();
    real* od = out.data();
    const std::size_t n = input.numel();
    for (std::size_t i = 0; i < n; ++i) od[i] = std::tanh(x[i]);

    auto xi = input.impl();
    auto oi = out.impl();
    record_op("tanh", {input}, out, [xi, oi, n]() {
        if (!xi->requires_grad) return;
        const real* g = oi->grad.data();
        const real* y = oi->data.data();
        real* din = ensure_grad(xi).data();
        for (std::size_t i = 0; i < n; ++i) din[i] += g[i] * (real(1) - y[i] * y[i]);
    });
    return out;
}

Tensor sigmoid_act(const Tensor& input) {
    Tensor out = Tensor::zeros(input.shape());
    const real* x = input.data();
    real* od = out.data();
    const std::size_t n = input.numel();
    for (std::size_t i = 0; i < n; ++i) {
        const real v = x[i];
        if (v >= 0) {
            od[i] = real(1) / (real(1) + std::exp(-v));
        } else {
            const real e = std::exp(v);
            od[i] = e / (real(1) + e);
        }
    }

    auto xi = input.impl();
    auto oi = out.impl();
    record_op("sigmoid", {input}, out, [xi, oi, n]() {
        if (!xi->requires_grad) return;
        const real* g = oi->grad.data();
        const real* y = oi->data.data();
        real* din = ensure_grad(xi).data();
        for (std::size_t i = 0; i < n; ++i) din[i] += g[i] * y[i] * (real(1) - y[i]);
    });
    return out;
}

// --------------------------------------------------------------------------
// structure ops

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    require_rank4(a, "concat_channels a");
    require_rank4(b, "concat_channels b");
    if (a.extent(0) != b.extent(0) || a.extent(2) != b.extent(2) || a.extent(3) != b.extent(3))
        throw dim_error("concat_channels: batch/spatial mismatch " + shape_str(a.shape()) +
                        " vs " + shape_str(b.shape()));
    const std::size_t B = a.extent(0), Ca = a.extent(1), Cb = b.extent(1);
    const std::size_t plane = a.extent(2) * a.extent(3);
    Tensor out = Tensor::zeros({B, Ca + Cb, a.extent(2), a.extent(3)});
    real* od = out.data();
    const real* ad = a.data();
    const real* bd = b.data();
    for (std::size_t bb = 0; bb < B; ++bb) {
        std::memcpy(od + bb * (Ca + Cb) * plane, ad + bb * Ca * plane, Ca * plane * sizeof(real));
        std::memcpy(od + (bb * (Ca + Cb) + Ca) * plane, bd + bb * Cb * plane, Cb * plane * sizeof(real));
    }

    auto ai = a.impl();
    auto bi = b.impl();
    auto oi = out.impl();
    record_op("concat_channels", {a, b}, out, [ai, bi, oi, B, Ca, Cb, plane]() {
        const real* g = oi->grad.data();
        if (ai->requires_grad) {
            real* da = ensure_grad(ai).data();
            for (std::size_t bb = 0; bb < B; ++bb) {
                const real* gp = g + bb * (Ca + Cb) * plane;
                real* dp = da + bb * Ca * plane;
                for (std::size_t i = 0; i < Ca * plane; ++i) dp[i] += gp[i];
            }
        }
        if (bi->requires_grad) {
            real* db = ensure_grad(bi).data();
            for (std::size_t bb = 0; bb < B; ++bb) {
                const real* gp = g + (bb * (Ca + Cb) + Ca) * plane;
                real* dp = db + bb * Cb * plane;
                for (std::size_t i = 0; i < Cb * plane; ++i) dp[i] += gp[i];
            }
        }
    });
    return out;
}

Tensor slice_channels(const Tensor& input, std::size_t begin, std::size_t end) {
    require_rank4(input, "slice_channels input");
    const std::size_t B = input.extent(0), C = input.extent(1);
    if (begin >= end || end > C)
        throw dim_error("slice_channels: bad range [" + std::to_string(begin) + "," +
                        std::to_string(end) + ") for " + std::to_string(C) + " channels");
    const std::size_t Cs = end - begin;
    const std::size_t plane = input.extent(2) * input.extent(3);
    Tensor out = Tensor::zeros({B, Cs, input.extent(2), input.extent(3)});
    const real* x = input.data();
    real* od = out.data();
    for (std::size_t b = 0; b < B; ++b)
        std::memcpy(od + b * Cs * plane, x + (b * C + begin) * plane, Cs * plane * sizeof(real));

    auto xi = input.impl();
    auto oi = out.impl();
    record_op("slice_channels", {input}, out, [xi, oi, B, C, Cs, begin, plane]() {
        if (!xi->requires_grad) return;
        const real* g = oi->grad.data();
        real* din = ensure_grad(xi).data();
        for (std::size_t b = 0; b < B; ++b) {
            real* dp = din + (b * C + begin) * plane;
            const real* gp = g + b * Cs * plane;
            for (std::size_t i = 0; i < Cs * plane; ++i) dp[i] += gp[i];
        }
    });
    return out;
}

Tensor skip_add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw dim_error("skip_add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = a.numel();
    const real* ad = a.data();
    const real* bd = b.data();
    real* od = out.data();
    for (std::size_t i = 0; i < n; ++i) od[i] = ad[i] + bd[i];

    auto ai = a.impl();
    auto bi = b.impl();
    auto oi = out.impl();
    record_op("skip_add", {a, b}, out, [ai, bi, oi, n]() {
        const real* g = oi->grad.data();
        if (ai->requires_grad) {
            real* da = ensure_grad(ai).data();
            for (std::size_t i = 0; i < n; ++i) da[i] += g[i];
        }
        if (bi->requires_grad) {
            real* db = ensure_grad(bi).data();
            for (std::size_t i = 0; i < n; ++i) db[i] += g[i];
        }
    });
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw dim_error("sub: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = a.numel();
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];

    auto ai = a.impl();
    auto bi = b.impl();
    auto oi = out.impl();
    record_op("sub", {a, b}, out, [ai, bi, oi, n]() {
        const real* g = oi->grad.data();
        if (ai->requires_grad) {
            real* da = ensure_grad(ai).data();
            for (std::size_t i = 0; i < n; ++i) da[i] += g[i];
        }
        if (bi->requires_grad) {
            real* db = ensure_grad(bi).data();
            for (std::size_t i = 0; i < n; ++i) db[i] -= g[i];
        }
    });
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw dim_error("mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = a.numel();
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];

    auto ai = a.impl();
    auto bi = b.impl();
    auto oi = out.impl();
    record_op("mul", {a, b}, out, [ai, bi, oi, n]() {
        const real* g = oi->grad.data();
        if (ai->requires_grad) {
            real* da = ensure_grad(ai).data();
            const real* bd = bi->data.data();
            for (std::size_t i = 0; i < n; ++i) da[i] += g[i] * bd[i];
        }
        if (bi->requires_grad) {
            real* db = ensure_grad(bi).data();
            const real* ad = ai->data.data();
            for (std::size_t i = 0; i < n; ++i) db[i] += g[i] * ad[i];
        }
    });
    return out;
}

Tensor affine(const Tensor& input, real k, real c) {
    Tensor out = Tensor::zeros(input.shape());
    const std::size_t n = input.numel();
    for (std::size_t i = 0; i < n; ++i) out[i] = k * input[i] + c;

    auto xi = input.impl();
    auto oi = out.impl();
    record_op("affine", {input}, out, [xi, oi, k, n]() {
        if (!xi->requires_grad) return;
        const real* g = oi->grad.data();
        real* din = ensure_grad(xi).data();
        for (std::size_t i = 0; i < n; ++i) din[i] += k * g[i];
    });
    return out;
}

Tensor scale(const Tensor& input, real k) { return affine(input, k, real(0)); }

Tensor log_eps(const Tensor& input, real eps) {
    Tensor out = Tensor::zeros(input.shape());
    const std::size_t n = input.numel();
    for (std::size_t i = 0; i < n; ++i) out[i] = std::log(input[i] + eps);

    auto xi = input.impl();
    auto oi = out.impl();
    record_op("log_eps", {input}, out, [xi, oi, eps, n]() {
        if (!xi->requires_grad) return;
        const real* g = oi->grad.data();
        const real* x = xi->data.data();
        real* din = ensure_grad(xi).data();
        for (std::size_t i = 0; i < n; ++i) din[i] += g[i] / (x[i] + eps);
    });
    return out;
}

Tensor sum_all(const Tensor& input) {
    Tensor out = Tensor::zeros({1});
    real acc = 0;
    const std::size_t n = input.numel();
    for (std::size_t i = 0; i < n; ++i) acc += input[i];
    out[0] = acc;

    auto xi = input.impl();
    auto oi = out.impl();
    record_op("sum_all", {input}, out, [xi, oi, n]() {
        if (!xi->requires_grad) return;
        const real g = oi->grad[0];
        real* din = ensure_grad(xi).data();
        for (std::size_t i = 0; i < n; ++i) din[i] += g;
    });
    return out;
}

Tensor mean_all(const Tensor& input) {
    return scale(sum_all(input), real(1) / static_cast<real>(input.numel()));
}

Tensor avg_pool2d(const Tensor& input, int window) {
    const SpatialView v = spatial_view(input, "avg_pool2d");
    if (window < 1) throw dim_error("avg_pool2d: window must be >= 1");
    const std::size_t win = static_cast<std::size_t>(window);
    if (v.h % win != 0 || v.w % win != 0)
        throw dim_error("avg_pool2d: spatial extents must be divisible by the window");
    const std::size_t Ho = v.h / win, Wo = v.w / win;
    Shape oshape = input.shape();
    oshape[oshape.size() - 2] = Ho;
    oshape[oshape.size() - 1] = Wo;
    Tensor out = Tensor::zeros(oshape);
    const real inv = real(1) / static_cast<real>(win * win);
    const real* x = input.data();
    real* od = out.data();
    for (std::size_t l = 0; l < v.lead; ++l)
        for (std::size_t i = 0; i < Ho; ++i)
            for (std::size_t j = 0; j < Wo; ++j) {
                real acc = 0;
                for (std::size_t u = 0; u < win; ++u)
                    for (std::size_t w = 0; w < win; ++w)
                        acc += x[(l * v.h + i * win + u) * v.w + j * win + w];
                od[(l * Ho + i) * Wo + j] = acc * inv;
            }

    auto xi = input.impl();
    auto oi = out.impl();
    record_op("avg_pool2d", {input}, out, [xi, oi, v, win, Ho, Wo, inv]() {
        if (!xi->requires_grad) return;
        const real* g = oi->grad.data();
        real* din = ensure_grad(xi).data();
        for (std::size_t l = 0; l < v.lead; ++l)
            for (std::size_t i = 0; i < Ho; ++i)
                for (std::size_t j = 0; j < Wo; ++j) {
                    const real gv = g[(l * Ho + i) * Wo + j] * inv;
                    for (std::size_t u = 0; u < win; ++u)
                        for (std::size_t w = 0; w < win; ++w)
                            din[(l * v.h + i * win + u) * v.w + j * win + w] += gv;
                }
    });
    return out;
}

Tensor diff_x(const Tensor& input) {
    const SpatialView v = spatial_view(input, "diff_x");
    if (v.w < 2) throw dim_error("diff_x: width must be at least 2");
    Shape oshape = input.shape();
    oshape[oshape.size() - 1] = v.w - 1;
    Tensor out = Tensor::zeros(oshape);
    const real* x = input.data();
    real* od = out.data();
    for (std::size_t l = 0; l < v.lead; ++l)
        for (std::size_t i = 0; i < v.h; ++i) {
            const real* row = x + (l * v.h + i) * v.w;
            real* orow = od + (l * v.h + i) * (v.w - 1);
            for (std::size_t j = 0; j + 1 < v.w; ++j) orow[j] = row[j + 1] - row[j];
        }

    auto xi = input.impl();
    auto oi = out.impl();
    record_op("diff_x", {input}, out, [xi, oi, v]() {
        if (!xi->requires_grad) return;
        const real* g = oi->grad.data();
        real* din = ensure_grad(xi).data();
        for (std::size_t l = 0; l < v.lead; ++l)
            for (std::size_t i = 0; i < v.h; ++i) {
                real* drow = din + (l * v.h + i) * v.w;
                const real* grow = g + (l * v.h + i) * (v.w - 1);
                for (std::size_t j = 0; j + 1 < v.w; ++j) {
                    drow[j + 1] += grow[j];
                    drow[j] -= grow[j];
                }
            }
    });
    return out;
}

Tensor diff_y(const Tensor& input) {
    const SpatialView v = spatial_view(input, "diff_y");
    if (v.h < 2) throw dim_error("diff_y: height must be at least 2");
    Shape oshape = input.shape();
    oshape[oshape.size() - 2] = v.h - 1;
    Tensor out = Tensor::zeros(oshape);
    const real* x = input.data();
    real* od = out.data();
    for (std::size_t l = 0; l < v.lead; ++l)
        for (std::size_t i = 0; i + 1 < v.h; ++i) {
            const real* row = x + (l * v.h + i) * v.w;
            const real* next = row + v.w;
            real* orow = od + (l * (v.h - 1) + i) * v.w;
            for (std::size_t j = 0; j < v.w; ++j) orow[j] = next[j] - row[j];
        }

    auto xi = input.impl();
    auto oi = out.impl();
    record_op("diff_y", {input}, out, [xi, oi, v]() {
        if (!xi->requires_grad) return;
        const real* g = oi->grad.data();
        real* din = ensure_grad(xi).data();
        for (std::size_t l = 0; l < v.lead; ++l)
            for (std::size_t i = 0; i + 1 < v.h; ++i) {
                real* drow = din + (l * v.h + i) * v.w;
                real* dnext = drow + v.w;
                const real* grow = g + (l * (v.h - 1) + i) * v.w;
                for (std::size_t j = 0; j < v.w; ++j) {
                    dnext[j] += grow[j];
                    drow[j] -= grow[j];
                }
            }
    });
    return out;
}

Tensor reshape(const Tensor& input, Shape new_shape) {
    if (shape_numel(new_shape) != input.numel())
        throw dim_error("reshape: element count mismatch " + shape_str(input.shape()) +
                        " -> " + shape_str(new_shape));
    Tensor out = Tensor::from(std::move(new_shape), input.vec());

    auto xi = input.impl();
    auto oi = out.impl();
    record_op("reshape", {input}, out, [xi, oi]() {
        if (!xi->requires_grad) return;
        const real* g = oi->grad.data();
        real* din = ensure_grad(xi).data();
        const std::size_t n = xi->data.size();
        for (std::size_t i = 0; i < n; ++i) din[i] += g[i];
    });
    return out;
}

// --------------------------------------------------------------------------
// gradcheck

GradCheckReport gradcheck(const std::string& name,
                          std::vector<std::pair<std::string, Tensor>> inputs,
                          const std::function<Tensor()>& forward,
                          double tolerance, double h, std::uint64_t seed) {
    GradCheckReport report;
    report.name = name;
    report.tolerance = tolerance;

    for (auto& [pname, t] : inputs) {
        t.set_requires_grad(true);
        t.zero_grad();
    }

    std::vector<std::vector<real>> analytic;
    {
        Tape tape;
        Tensor loss = forward();
        tape.backward(loss);
        for (auto& [pname, t] : inputs) {
            if (t.has_grad())
                analytic.push_back(t.grad());
            else
                analytic.push_back(std::vector<real>(t.numel(), real(0)));
        }
    }

    const std::size_t kFullSweepLimit = 512;
    const std::size_t kSampleCount = 64;

    for (std::size_t pi = 0; pi < inputs.size(); ++pi) {
        auto& [pname, t] = inputs[pi];
        GradCheckReport::Entry entry;
        entry.param = pname;

        std::vector<std::size_t> coords;
        if (t.numel() <= kFullSweepLimit) {
            coords.resize(t.numel());
            for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
        } else {
            Rng rng(splitmix64(seed ^ splitmix64(0x9e3779b9ULL + pi)));
            for (std::size_t i = 0; i < kSampleCount; ++i) coords.push_back(rng.index(t.numel()));
        }

        for (std::size_t idx : coords) {
            const real saved = t[idx];
            t[idx] = saved + static_cast<real>(h);
            const double fp = static_cast<double>(forward()[0]);
            t[idx] = saved - static_cast<real>(h);
            const double fm = static_cast<double>(forward()[0]);
            t[idx] = saved;

            const double numeric = (fp - fm) / (2.0 * h);
            const double a = static_cast<double>(analytic[pi][idx]);
            const double denom = std::max(std::abs(a), std::abs(numeric));
            double rel;
            if (denom < 1e-6) {
                rel = std::abs(a - numeric) <= 1e-7 ? 0.0 : std::abs(a - numeric);
            } else {
                rel = std::abs(a - numeric) / denom;
            }
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.entries.push_back(std::move(entry));
    }
    report.pass = report.max_rel_err < tolerance;
    return report;
}

}  // namespace hazeforge
