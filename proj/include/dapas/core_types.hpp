#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dapas/tensor.hpp"

namespace dapas {

constexpr int kDefaultIgnoreIndex = 255;

/// Spatial resolutions must be divisible by 32: the encoder halves the
/// resolution five times and every level must stay integral.
constexpr int kResolutionDivisor = 32;

/// Batch of images, channels-first, intensities on the [0,1] scale.
/// 0-255 values exist only at file I/O boundaries.
struct ImageBatch {
    Tensor data;  // (batch, channel, height, width)

    ImageBatch() = default;
    explicit ImageBatch(Tensor t) : data(std::move(t)) {}

    int batch() const { return data.shape.n; }
    int channels() const { return data.shape.c; }
    int height() const { return data.shape.h; }
    int width() const { return data.shape.w; }
    std::pair<int, int> resolution() const { return {height(), width()}; }
};

/// Throws std::invalid_argument unless all ImageBatch invariants hold:
/// batch >= 1, channels in {1,3}, every element in [0,1], and height and
/// width divisible by 32. Returns the input unchanged (idempotent).
const ImageBatch& validate_batch(const ImageBatch& images);

/// The range-and-shape part of validate_batch without the divisible-by-32
/// resolution rule, which only the five-level encoder needs. Attacks and
/// toy models accept any resolution.
const ImageBatch& validate_intensities(const ImageBatch& images);

/// Per-pixel integer class labels. Labels are in [0, num_classes) or equal
/// ignore_index; ignored pixels take part in neither losses nor metrics.
struct SegmentationMask {
    int n = 0;
    int h = 0;
    int w = 0;
    int num_classes = 2;
    int ignore_index = kDefaultIgnoreIndex;
    std::vector<std::int32_t> labels;  // n*h*w, row-major

    SegmentationMask() = default;
    SegmentationMask(int n_, int h_, int w_, int num_classes_,
                     int ignore_index_ = kDefaultIgnoreIndex)
        : n(n_), h(h_), w(w_), num_classes(num_classes_), ignore_index(ignore_index_),
          labels(static_cast<std::size_t>(n_) * h_ * w_, 0) {}

    std::int32_t& at(int in, int iy, int ix) { return labels[idx(in, iy, ix)]; }
    std::int32_t at(int in, int iy, int ix) const { return labels[idx(in, iy, ix)]; }
    std::size_t idx(int in, int iy, int ix) const {
        return (static_cast<std::size_t>(in) * h + iy) * w + ix;
    }
    std::int64_t numel() const { return static_cast<std::int64_t>(n) * h * w; }
};

/// Throws unless every label is in [0, num_classes) or equals ignore_index.
const SegmentationMask& validate_mask(const SegmentationMask& mask);

/// Throws unless mask spatial shape matches the image batch.
void validate_pair(const ImageBatch& images, const SegmentationMask& mask);

enum class NoiseKind { Gaussian, Uniform, Bimodal };

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& s);

/// Declarative description of a corruption distribution. Only the fields of
/// the declared kind are meaningful; validate() enforces that per-kind
/// constraints hold. The factory defaults carry the reference parameters:
/// gaussian(0, 0.004), uniform(-0.035, 0.035), bimodal(+-0.024, 0.004, 1/2).
struct NoiseSpec {
    NoiseKind kind = NoiseKind::Gaussian;

    // gaussian
    double mean = 0.0;
    double std = 0.0;
    // uniform
    double low = 0.0;
    double high = 0.0;
    // bimodal (two-component gaussian mixture; std above is the per-mode std)
    std::pair<double, double> mode_centers{0.0, 0.0};
    std::pair<double, double> mode_weights{0.5, 0.5};

    static NoiseSpec gaussian(double mean = 0.0, double std = 0.004);
    static NoiseSpec uniform(double low = -0.035, double high = 0.035);
    static NoiseSpec bimodal(double center_lo = -0.024, double center_hi = 0.024,
                             double std = 0.004, double weight_lo = 0.5,
                             double weight_hi = 0.5);

    /// Throws std::invalid_argument on per-kind constraint violations
    /// (std <= 0, low >= high, weights not summing to 1, ...).
    void validate() const;
};

enum class AttackFamily { Fgsm, Ifgsm };

std::string to_string(AttackFamily family);
AttackFamily attack_family_from_string(const std::string& s);

/// The paper reads its step-size constant on the 0-255 scale; 0.25 of a
/// pixel level is 0.25/255 on the internal [0,1] scale.
constexpr double kDefaultIfgsmAlpha = 0.25 / 255.0;

/// Largest epsilon in the studied attack regime; larger budgets are legal
/// but get flagged in reports.
constexpr double kStudiedEpsilonLimit = 0.032;

/// Attack family, budget and step parameters. epsilon and alpha live on the
/// [0,1] intensity scale. steps == 0 means "derive": fixed to 1 for FGSM,
/// the epsilon-dependent schedule for I-FGSM (see attacks::step_count).
struct AttackSpec {
    AttackFamily family = AttackFamily::Fgsm;
    double epsilon = kStudiedEpsilonLimit;
    double alpha = kDefaultIfgsmAlpha;
    bool targeted = false;
    int steps = 0;

    void validate() const;
    bool exceeds_studied_regime() const { return epsilon > kStudiedEpsilonLimit + 1e-12; }
};

/// One ratio with the provenance of its numerator and denominator mIoU.
struct IouRatio {
    double value = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
};

/// The relative robustness metrics: RatioATT = mIoU_AO / mIoU_CO,
/// RatioROB = mIoU_AP / mIoU_CO, RatioRED = mIoU_CP / mIoU_CO.
struct IouRatios {
    std::optional<IouRatio> att;
    std::optional<IouRatio> rob;
    std::optional<IouRatio> red;
};

/// Evaluation result: confusion counts (rows = ground truth, columns =
/// prediction), per-class IoU (absent for classes with empty union), mIoU
/// over present classes, and optionally the three IoU ratios.
struct MetricsReport {
    int num_classes = 0;
    std::vector<std::int64_t> confusion;  // num_classes * num_classes
    std::vector<std::optional<double>> per_class_iou;
    double miou = 0.0;
    std::optional<IouRatios> ratios;
};

}  // namespace dapas
