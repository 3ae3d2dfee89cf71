#include "dapas/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dapas {

std::string Shape4::str() const {
    std::ostringstream os;
    os << "(" << n << ", " << c << ", " << h << ", " << w << ")";
    return os.str();
}

Tensor Tensor::full(Shape4 s, double value) {
    Tensor t(s);
    std::fill(t.data.begin(), t.data.end(), value);
    return t;
}

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape.str() +
                                    " vs " + b.shape.str());
    }
}
}  // namespace

void add_inplace(Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

void sub_inplace(Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] -= b.data[i];
}

void scale_inplace(Tensor& a, double s) {
    for (double& v : a.data) v *= s;
}

void clamp_inplace(Tensor& a, double lo, double hi) {
    for (double& v : a.data) v = std::min(std::max(v, lo), hi);
}

Tensor add(const Tensor& a, const Tensor& b) {
    Tensor out = a;
    add_inplace(out, b);
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    Tensor out = a;
    sub_inplace(out, b);
    return out;
}

double linf_norm(const Tensor& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::abs(v));
    return m;
}

double linf_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "linf_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    }
    return m;
}

double mean_squared_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mean_squared_diff");
    if (a.data.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

bool all_finite(const Tensor& a) {
    return std::all_of(a.data.begin(), a.data.end(), [](double v) { return std::isfinite(v); });
}

double psnr(const Tensor& a, const Tensor& b) {
    const double mse = mean_squared_diff(a, b);
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

}  // namespace dapas
