#pragma once

// Test-only oracle model: a per-pixel linear classifier whose loss gradient
// has a closed form, so attack behavior can be checked against hand
// arithmetic and finite differences.

#include <cmath>
#include <vector>

#include "dapas/pipeline.hpp"

namespace dapas::testsupport {

/// logits[c](pixel p) = sum_ch w[c][ch] * x[ch][p] + b[c], shared across
/// pixels. input_gradient is the exact analytic gradient of the mean
/// cross-entropy over non-ignored pixels.
class ToyLinearSegmenter : public Segmenter {
public:
    ToyLinearSegmenter(std::vector<std::vector<double>> weights, std::vector<double> bias,
                       int ignore_index = kDefaultIgnoreIndex)
        : w_(std::move(weights)), b_(std::move(bias)), ignore_(ignore_index) {}

    int num_classes() const override { return static_cast<int>(w_.size()); }
    int ignore_index() const override { return ignore_; }

    SegmenterInfo info() const override {
        SegmenterInfo info;
        info.num_classes = num_classes();
        info.ignore_index = ignore_;
        info.norm_mean.assign(w_.front().size(), 0.0);
        info.norm_std.assign(w_.front().size(), 1.0);
        return info;
    }

    Tensor predict_logits(const ImageBatch& images) override {
        const Shape4 s = images.data.shape;
        const int classes = num_classes();
        Tensor logits({s.n, classes, s.h, s.w});
        for (int n = 0; n < s.n; ++n) {
            for (int c = 0; c < classes; ++c) {
                for (int y = 0; y < s.h; ++y) {
                    for (int x = 0; x < s.w; ++x) {
                        double v = b_[c];
                        for (int ch = 0; ch < s.c; ++ch) {
                            v += w_[c][ch] * images.data.at(n, ch, y, x);
                        }
                        logits.at(n, c, y, x) = v;
                    }
                }
            }
        }
        return logits;
    }

    double loss(const ImageBatch& images, const SegmentationMask& labels) {
        const Tensor logits = predict_logits(images);
        return nn::softmax_cross_entropy(logits, labels).loss;
    }

    Tensor input_gradient(const ImageBatch& images, const SegmentationMask& labels) override {
        const Shape4 s = images.data.shape;
        const int classes = num_classes();
        const Tensor logits = predict_logits(images);

        std::int64_t valid = 0;
        for (std::int32_t v : labels.labels) {
            if (v != ignore_) ++valid;
        }
        Tensor grad(s);
        if (valid == 0) return grad;
        const double inv = 1.0 / static_cast<double>(valid);

        std::vector<double> soft(classes);
        for (int n = 0; n < s.n; ++n) {
            for (int y = 0; y < s.h; ++y) {
                for (int x = 0; x < s.w; ++x) {
                    const std::int32_t label = labels.at(n, y, x);
                    if (label == ignore_) continue;
                    double mx = logits.at(n, 0, y, x);
                    for (int c = 1; c < classes; ++c) mx = std::max(mx, logits.at(n, c, y, x));
                    double z = 0.0;
                    for (int c = 0; c < classes; ++c) {
                        soft[c] = std::exp(logits.at(n, c, y, x) - mx);
                        z += soft[c];
                    }
                    for (int ch = 0; ch < s.c; ++ch) {
                        double g = 0.0;
                        for (int c = 0; c < classes; ++c) {
                            const double p = soft[c] / z;
                            g += (p - (c == label ? 1.0 : 0.0)) * w_[c][ch];
                        }
                        grad.at(n, ch, y, x) = g * inv;
                    }
                }
            }
        }
        return grad;
    }

    const std::vector<std::vector<double>>& weights() const { return w_; }

private:
    std::vector<std::vector<double>> w_;
    std::vector<double> b_;
    int ignore_;
};

/// A 2-class, 1-channel toy model with distinct per-class weights.
inline ToyLinearSegmenter default_toy_model() {
    return ToyLinearSegmenter({{1.7}, {-0.9}}, {0.1, -0.05});
}

/// A 3-class RGB toy model.
inline ToyLinearSegmenter default_rgb_toy_model() {
    return ToyLinearSegmenter({{2.1, -0.4, 0.3}, {-1.2, 1.5, -0.6}, {0.2, -0.8, 1.1}},
                              {0.05, -0.1, 0.0});
}

}  // namespace dapas::testsupport
