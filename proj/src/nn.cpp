#include "dapas/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace dapas::nn {

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n) {
    std::memset(c, 0, sizeof(double) * static_cast<std::size_t>(m) * n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        double* crow = c + static_cast<std::size_t>(i) * n;
        const double* arow = a + static_cast<std::size_t>(i) * k;
        for (int kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = b + static_cast<std::size_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
    std::memset(c, 0, sizeof(double) * static_cast<std::size_t>(m) * n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const double av = a[static_cast<std::size_t>(kk) * m + i];
            if (av == 0.0) continue;
            const double* brow = b + static_cast<std::size_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* brow = b + static_cast<std::size_t>(j) * k;
            double acc = 0.0;
            for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            crow[j] = acc;
        }
    }
}

namespace {

// im2col over one sample: (C, H, W) -> (C*k*k, Ho*Wo).
void im2col(const double* x, int c, int h, int w, int kernel, int stride, int pad,
            int ho, int wo, double* cols) {
    const int l = ho * wo;
#pragma omp parallel for schedule(static)
    for (int row = 0; row < c * kernel * kernel; ++row) {
        const int ci = row / (kernel * kernel);
        const int ki = (row / kernel) % kernel;
        const int kj = row % kernel;
        const double* xc = x + static_cast<std::size_t>(ci) * h * w;
        double* out = cols + static_cast<std::size_t>(row) * l;
        for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride + ki - pad;
            if (iy < 0 || iy >= h) {
                std::fill(out + oy * wo, out + (oy + 1) * wo, 0.0);
                continue;
            }
            for (int ox = 0; ox < wo; ++ox) {
                const int ix = ox * stride + kj - pad;
                out[oy * wo + ox] = (ix >= 0 && ix < w) ? xc[iy * w + ix] : 0.0;
            }
        }
    }
}

// Adjoint of im2col: scatter-add (C*k*k, Ho*Wo) back into (C, H, W).
// Parallel over channels; each target element belongs to one channel.
void col2im(const double* cols, int c, int h, int w, int kernel, int stride, int pad,
            int ho, int wo, double* x) {
    std::memset(x, 0, sizeof(double) * static_cast<std::size_t>(c) * h * w);
    const int l = ho * wo;
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < c; ++ci) {
        double* xc = x + static_cast<std::size_t>(ci) * h * w;
        for (int ki = 0; ki < kernel; ++ki) {
            for (int kj = 0; kj < kernel; ++kj) {
                const int row = (ci * kernel + ki) * kernel + kj;
                const double* in = cols + static_cast<std::size_t>(row) * l;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride + ki - pad;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride + kj - pad;
                        if (ix >= 0 && ix < w) xc[iy * w + ix] += in[oy * wo + ox];
                    }
                }
            }
        }
    }
}

int conv_out(int size, int kernel, int stride, int pad) {
    return (size + 2 * pad - kernel) / stride + 1;
}

int deconv_out(int size, int kernel, int stride, int pad) {
    return (size - 1) * stride - 2 * pad + kernel;
}

}  // namespace

Conv2d::Conv2d(int in_ch_, int out_ch_, int kernel_, int stride_, int pad_, std::string name)
    : weight({out_ch_, in_ch_, kernel_, kernel_}, name + ".weight"),
      bias({out_ch_, 1, 1, 1}, name + ".bias"),
      in_ch(in_ch_), out_ch(out_ch_), kernel(kernel_), stride(stride_), pad(pad_) {}

void Conv2d::init_he(RandomStream& rng) {
    const double std = std::sqrt(2.0 / (in_ch * kernel * kernel));
    for (double& v : weight.value.data) v = rng.next_normal(0.0, std);
    std::fill(bias.value.data.begin(), bias.value.data.end(), 0.0);
}

std::pair<int, int> Conv2d::output_size(int h, int w) const {
    return {conv_out(h, kernel, stride, pad), conv_out(w, kernel, stride, pad)};
}

Tensor Conv2d::forward(const Tensor& x) {
    if (x.shape.c != in_ch) {
        throw std::invalid_argument(weight.name + ": expected " + std::to_string(in_ch) +
                                    " input channels, got " + std::to_string(x.shape.c));
    }
    x_cache_ = x;
    const auto [ho, wo] = output_size(x.shape.h, x.shape.w);
    const int l = ho * wo;
    const int ckk = in_ch * kernel * kernel;
    Tensor out({x.shape.n, out_ch, ho, wo});
    std::vector<double> cols(static_cast<std::size_t>(ckk) * l);
    for (int n = 0; n < x.shape.n; ++n) {
        im2col(&x.data[x.idx(n, 0, 0, 0)], in_ch, x.shape.h, x.shape.w, kernel, stride, pad,
               ho, wo, cols.data());
        double* o = &out.data[out.idx(n, 0, 0, 0)];
        matmul_nn(weight.value.data.data(), cols.data(), o, out_ch, ckk, l);
        for (int co = 0; co < out_ch; ++co) {
            const double b = bias.value.data[co];
            double* row = o + static_cast<std::size_t>(co) * l;
            for (int j = 0; j < l; ++j) row[j] += b;
        }
    }
    return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
    const Tensor& x = x_cache_;
    const auto [ho, wo] = output_size(x.shape.h, x.shape.w);
    const int l = ho * wo;
    const int ckk = in_ch * kernel * kernel;
    Tensor grad_in(x.shape);
    std::vector<double> cols(static_cast<std::size_t>(ckk) * l);
    std::vector<double> dcols(static_cast<std::size_t>(ckk) * l);
    std::vector<double> dw(static_cast<std::size_t>(out_ch) * ckk);
    for (int n = 0; n < x.shape.n; ++n) {
        const double* g = &grad_out.data[grad_out.idx(n, 0, 0, 0)];
        im2col(&x.data[x.idx(n, 0, 0, 0)], in_ch, x.shape.h, x.shape.w, kernel, stride, pad,
               ho, wo, cols.data());
        matmul_nt(g, cols.data(), dw.data(), out_ch, l, ckk);
        for (std::size_t i = 0; i < dw.size(); ++i) weight.grad.data[i] += dw[i];
        for (int co = 0; co < out_ch; ++co) {
            const double* row = g + static_cast<std::size_t>(co) * l;
            double acc = 0.0;
            for (int j = 0; j < l; ++j) acc += row[j];
            bias.grad.data[co] += acc;
        }
        matmul_tn(weight.value.data.data(), g, dcols.data(), ckk, out_ch, l);
        col2im(dcols.data(), in_ch, x.shape.h, x.shape.w, kernel, stride, pad, ho, wo,
               &grad_in.data[grad_in.idx(n, 0, 0, 0)]);
    }
    return grad_in;
}

ConvTranspose2d::ConvTranspose2d(int in_ch_, int out_ch_, int kernel_, int stride_, int pad_,
                                 std::string name)
    : weight({in_ch_, out_ch_, kernel_, kernel_}, name + ".weight"),
      bias({out_ch_, 1, 1, 1}, name + ".bias"),
      in_ch(in_ch_), out_ch(out_ch_), kernel(kernel_), stride(stride_), pad(pad_) {}

void ConvTranspose2d::init_he(RandomStream& rng) {
    const double std = std::sqrt(2.0 / (in_ch * kernel * kernel));
    for (double& v : weight.value.data) v = rng.next_normal(0.0, std);
    std::fill(bias.value.data.begin(), bias.value.data.end(), 0.0);
}

std::pair<int, int> ConvTranspose2d::output_size(int h, int w) const {
    return {deconv_out(h, kernel, stride, pad), deconv_out(w, kernel, stride, pad)};
}

Tensor ConvTranspose2d::forward(const Tensor& x) {
    if (x.shape.c != in_ch) {
        throw std::invalid_argument(weight.name + ": expected " + std::to_string(in_ch) +
                                    " input channels, got " + std::to_string(x.shape.c));
    }
    x_cache_ = x;
    const auto [ho, wo] = output_size(x.shape.h, x.shape.w);
    const int l_in = x.shape.h * x.shape.w;
    const int ckk = out_ch * kernel * kernel;
    Tensor out({x.shape.n, out_ch, ho, wo});
    std::vector<double> cols(static_cast<std::size_t>(ckk) * l_in);
    for (int n = 0; n < x.shape.n; ++n) {
        // The forward pass is the adjoint of a stride-s convolution taking
        // (out_ch, ho, wo) down to (in_ch, h, w).
        matmul_tn(weight.value.data.data(), &x.data[x.idx(n, 0, 0, 0)], cols.data(), ckk,
                  in_ch, l_in);
        double* o = &out.data[out.idx(n, 0, 0, 0)];
        col2im(cols.data(), out_ch, ho, wo, kernel, stride, pad, x.shape.h, x.shape.w, o);
        const int l_out = ho * wo;
        for (int co = 0; co < out_ch; ++co) {
            const double b = bias.value.data[co];
            double* row = o + static_cast<std::size_t>(co) * l_out;
            for (int j = 0; j < l_out; ++j) row[j] += b;
        }
    }
    return out;
}

Tensor ConvTranspose2d::backward(const Tensor& grad_out) {
    const Tensor& x = x_cache_;
    const auto [ho, wo] = output_size(x.shape.h, x.shape.w);
    const int l_in = x.shape.h * x.shape.w;
    const int l_out = ho * wo;
    const int ckk = out_ch * kernel * kernel;
    Tensor grad_in(x.shape);
    std::vector<double> cols(static_cast<std::size_t>(ckk) * l_in);
    std::vector<double> dw(static_cast<std::size_t>(in_ch) * ckk);
    for (int n = 0; n < x.shape.n; ++n) {
        const double* g = &grad_out.data[grad_out.idx(n, 0, 0, 0)];
        im2col(g, out_ch, ho, wo, kernel, stride, pad, x.shape.h, x.shape.w, cols.data());
        matmul_nn(weight.value.data.data(), cols.data(), &grad_in.data[grad_in.idx(n, 0, 0, 0)],
                  in_ch, ckk, l_in);
        matmul_nt(&x.data[x.idx(n, 0, 0, 0)], cols.data(), dw.data(), in_ch, l_in, ckk);
        for (std::size_t i = 0; i < dw.size(); ++i) weight.grad.data[i] += dw[i];
        for (int co = 0; co < out_ch; ++co) {
            const double* row = g + static_cast<std::size_t>(co) * l_out;
            double acc = 0.0;
            for (int j = 0; j < l_out; ++j) acc += row[j];
            bias.grad.data[co] += acc;
        }
    }
    return grad_in;
}

Tensor Elu::forward(const Tensor& x) {
    Tensor y(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double v = x.data[i];
        y.data[i] = v > 0.0 ? v : std::expm1(v);
    }
    y_cache_ = y;
    return y;
}

Tensor Elu::backward(const Tensor& grad_out) const {
    Tensor g(grad_out.shape);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        const double y = y_cache_.data[i];
        g.data[i] = grad_out.data[i] * (y > 0.0 ? 1.0 : y + 1.0);
    }
    return g;
}

Tensor Sigmoid::forward(const Tensor& x) {
    Tensor y(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        y.data[i] = 1.0 / (1.0 + std::exp(-x.data[i]));
    }
    y_cache_ = y;
    return y;
}

Tensor Sigmoid::backward(const Tensor& grad_out) const {
    Tensor g(grad_out.shape);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        const double y = y_cache_.data[i];
        g.data[i] = grad_out.data[i] * y * (1.0 - y);
    }
    return g;
}

Adam::Adam(std::vector<Param*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Param* p : params_) {
        m_.emplace_back(p->value.shape);
        v_.emplace_back(p->value.shape);
    }
}

void Adam::zero_grad() {
    for (Param* p : params_) {
        std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Param& p = *params_[pi];
        Tensor& m = m_[pi];
        Tensor& v = v_[pi];
        for (std::size_t i = 0; i < p.value.data.size(); ++i) {
            const double g = p.grad.data[i];
            m.data[i] = beta1_ * m.data[i] + (1.0 - beta1_) * g;
            v.data[i] = beta2_ * v.data[i] + (1.0 - beta2_) * g * g;
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            p.value.data[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

LossGrad mse_loss(const Tensor& output, const Tensor& target) {
    if (!output.same_shape(target)) {
        throw std::invalid_argument("mse_loss: shape mismatch");
    }
    LossGrad lg;
    lg.grad = Tensor(output.shape);
    const double inv = 1.0 / static_cast<double>(output.numel());
    double acc = 0.0;
    for (std::size_t i = 0; i < output.data.size(); ++i) {
        const double d = output.data[i] - target.data[i];
        acc += d * d;
        lg.grad.data[i] = 2.0 * d * inv;
    }
    lg.loss = acc * inv;
    return lg;
}

LossGrad bce_loss(const Tensor& output, const Tensor& target) {
    if (!output.same_shape(target)) {
        throw std::invalid_argument("bce_loss: shape mismatch");
    }
    LossGrad lg;
    lg.grad = Tensor(output.shape);
    const double inv = 1.0 / static_cast<double>(output.numel());
    double acc = 0.0;
    for (std::size_t i = 0; i < output.data.size(); ++i) {
        const double y = std::min(std::max(output.data[i], 1e-12), 1.0 - 1e-12);
        const double t = target.data[i];
        acc += -(t * std::log(y) + (1.0 - t) * std::log(1.0 - y));
        lg.grad.data[i] = (y - t) / (y * (1.0 - y)) * inv;
    }
    lg.loss = acc * inv;
    return lg;
}

LossGrad softmax_cross_entropy(const Tensor& logits, const SegmentationMask& labels) {
    const Shape4& s = logits.shape;
    if (s.n != labels.n || s.h != labels.h || s.w != labels.w) {
        throw std::invalid_argument("softmax_cross_entropy: logits/labels shape mismatch");
    }
    if (s.c != labels.num_classes) {
        throw std::invalid_argument("softmax_cross_entropy: class count mismatch");
    }
    LossGrad lg;
    lg.grad = Tensor(s);

    std::int64_t valid = 0;
    for (std::int32_t v : labels.labels) {
        if (v != labels.ignore_index) ++valid;
    }
    if (valid == 0) {
        lg.loss = 0.0;
        return lg;
    }
    const double inv = 1.0 / static_cast<double>(valid);
    const int plane = s.h * s.w;
    double acc = 0.0;
    std::vector<double> probs(s.c);
    for (int n = 0; n < s.n; ++n) {
        const double* base = &logits.data[logits.idx(n, 0, 0, 0)];
        double* gbase = &lg.grad.data[lg.grad.idx(n, 0, 0, 0)];
        for (int p = 0; p < plane; ++p) {
            const std::int32_t y = labels.labels[static_cast<std::size_t>(n) * plane + p];
            if (y == labels.ignore_index) continue;
            double mx = base[p];
            for (int c = 1; c < s.c; ++c) {
                mx = std::max(mx, base[static_cast<std::size_t>(c) * plane + p]);
            }
            double z = 0.0;
            for (int c = 0; c < s.c; ++c) {
                probs[c] = std::exp(base[static_cast<std::size_t>(c) * plane + p] - mx);
                z += probs[c];
            }
            acc += -(std::log(probs[y] / z));
            for (int c = 0; c < s.c; ++c) {
                const double soft = probs[c] / z;
                gbase[static_cast<std::size_t>(c) * plane + p] =
                    (soft - (c == y ? 1.0 : 0.0)) * inv;
            }
        }
    }
    lg.loss = acc * inv;
    return lg;
}

SegmentationMask argmax_classes(const Tensor& logits, int num_classes, int ignore_index) {
    const Shape4& s = logits.shape;
    SegmentationMask mask(s.n, s.h, s.w, num_classes, ignore_index);
    const int plane = s.h * s.w;
    for (int n = 0; n < s.n; ++n) {
        const double* base = &logits.data[logits.idx(n, 0, 0, 0)];
        for (int p = 0; p < plane; ++p) {
            int best = 0;
            double bv = base[p];
            for (int c = 1; c < s.c; ++c) {
                const double v = base[static_cast<std::size_t>(c) * plane + p];
                if (v > bv) {
                    bv = v;
                    best = c;
                }
            }
            mask.labels[static_cast<std::size_t>(n) * plane + p] = best;
        }
    }
    return mask;
}

}  // namespace dapas::nn
