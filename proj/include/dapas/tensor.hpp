#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dapas {

/// Shape of a rank-4 NCHW tensor.
struct Shape4 {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    std::int64_t numel() const {
        return static_cast<std::int64_t>(n) * c * h * w;
    }
    bool operator==(const Shape4&) const = default;
    std::string str() const;
};

/// Dense rank-4 tensor of doubles, NCHW layout. All model math in the
/// toolkit runs in double precision.
struct Tensor {
    Shape4 shape{};
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape4 s) : shape(s), data(static_cast<std::size_t>(s.numel()), 0.0) {}

    static Tensor zeros(Shape4 s) { return Tensor(s); }
    static Tensor full(Shape4 s, double value);

    std::int64_t numel() const { return shape.numel(); }
    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    double& at(int n, int c, int h, int w) {
        return data[idx(n, c, h, w)];
    }
    double at(int n, int c, int h, int w) const {
        return data[idx(n, c, h, w)];
    }

    std::size_t idx(int in, int ic, int ih, int iw) const {
        return ((static_cast<std::size_t>(in) * shape.c + ic) * shape.h + ih) * shape.w + iw;
    }
};

// Elementwise helpers. Shape mismatches throw std::invalid_argument.
void add_inplace(Tensor& a, const Tensor& b);
void sub_inplace(Tensor& a, const Tensor& b);
void scale_inplace(Tensor& a, double s);
void clamp_inplace(Tensor& a, double lo, double hi);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);

double linf_norm(const Tensor& a);
double linf_diff(const Tensor& a, const Tensor& b);
double mean_squared_diff(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& a);

/// PSNR in dB between two tensors on the [0,1] intensity scale.
double psnr(const Tensor& a, const Tensor& b);

}  // namespace dapas
