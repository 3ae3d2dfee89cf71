#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dapas/core_types.hpp"
#include "dapas/rng.hpp"
#include "dapas/tensor.hpp"

namespace dapas::nn {

/// A learnable tensor with its gradient accumulator.
struct Param {
    Tensor value;
    Tensor grad;
    std::string name;

    explicit Param(Shape4 s = {}, std::string name_ = "")
        : value(s), grad(s), name(std::move(name_)) {}
};

// Row-major matrix products. Parallelised over output rows only, so results
// are bit-deterministic regardless of thread count.
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);  // c = a^T b, a is (k x m)
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);  // c = a b^T, b is (n x k)

/// Strided convolution. Weight layout (out_ch, in_ch, k, k).
class Conv2d {
public:
    Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad, std::string name = "conv");

    void init_he(RandomStream& rng);

    /// Output spatial size for an input of (h, w).
    std::pair<int, int> output_size(int h, int w) const;

    Tensor forward(const Tensor& x);
    /// Accumulates into weight.grad / bias.grad; returns the input gradient.
    Tensor backward(const Tensor& grad_out);

    Param weight;
    Param bias;
    int in_ch, out_ch, kernel, stride, pad;

private:
    Tensor x_cache_;
};

/// Transposed (fractionally-strided) convolution. Weight layout
/// (in_ch, out_ch, k, k). With kernel 4, stride 2, pad 1 it exactly doubles
/// the spatial resolution, mirroring Conv2d's halving.
class ConvTranspose2d {
public:
    ConvTranspose2d(int in_ch, int out_ch, int kernel, int stride, int pad,
                    std::string name = "deconv");

    void init_he(RandomStream& rng);

    std::pair<int, int> output_size(int h, int w) const;

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

    Param weight;
    Param bias;
    int in_ch, out_ch, kernel, stride, pad;

private:
    Tensor x_cache_;
};

/// ELU with alpha = 1.
class Elu {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out) const;

private:
    Tensor y_cache_;
};

class Sigmoid {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out) const;

private:
    Tensor y_cache_;
};

/// Adam with the conventional published defaults for the moment decays.
class Adam {
public:
    explicit Adam(std::vector<Param*> params, double lr = 5e-4, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);

    void zero_grad();
    void step();

    double learning_rate() const { return lr_; }

private:
    std::vector<Param*> params_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
};

struct LossGrad {
    double loss = 0.0;
    Tensor grad;  // d loss / d input-of-loss
};

/// Mean squared error over all elements.
LossGrad mse_loss(const Tensor& output, const Tensor& target);

/// Mean binary cross-entropy, treating intensities as probabilities.
/// Output elements must lie strictly inside (0, 1).
LossGrad bce_loss(const Tensor& output, const Tensor& target);

/// Mean per-pixel softmax cross-entropy over non-ignored pixels. Pixels
/// labeled ignore_index contribute zero loss and zero gradient. Returns the
/// gradient with respect to the logits (N, C, H, W).
LossGrad softmax_cross_entropy(const Tensor& logits, const SegmentationMask& labels);

/// Per-pixel argmax over the class channel.
SegmentationMask argmax_classes(const Tensor& logits, int num_classes, int ignore_index);

}  // namespace dapas::nn
