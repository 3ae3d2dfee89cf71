#pragma once

#include <optional>

#include "dapas/core_types.hpp"
#include "dapas/tensor.hpp"

namespace dapas {

/// A model that exposes input gradients of its segmentation loss. Gradients
/// are taken with the parameters frozen; input_gradient returns
/// d(mean cross-entropy over non-ignored pixels)/d(images) with the same
/// shape as the images.
class GradientModel {
public:
    virtual ~GradientModel() = default;

    virtual int num_classes() const = 0;
    virtual int ignore_index() const = 0;

    /// Per-pixel class logits (N, num_classes, H, W).
    virtual Tensor predict_logits(const ImageBatch& images) = 0;

    virtual Tensor input_gradient(const ImageBatch& images, const SegmentationMask& labels) = 0;
};

struct AttackResult {
    ImageBatch adversarial;
    ImageBatch original;
    AttackSpec spec;
    double linf_delta = 0.0;  // measured ||adversarial - original||_inf
};

/// I-FGSM step-count schedule: with eps expressed on the 0-255 scale,
/// min(eps+2, 4*eps) in the small-budget branch (eps <= 0.008 on the [0,1]
/// scale), min(eps+4, 1.24*eps) otherwise, rounded to the nearest integer
/// and floored at 1.
int step_count(double epsilon);

/// Single gradient-sign step of size epsilon, then clamp to [0,1].
/// Untargeted ascends the loss at the true labels; targeted descends the
/// loss at the target labels. epsilon = 0 is accepted as a degenerate case
/// and returns the input bit-exactly.
AttackResult fgsm(GradientModel& model, const ImageBatch& images, const SegmentationMask& labels,
                  double epsilon, bool targeted);

/// Iterated gradient-sign steps of size alpha with per-step projection onto
/// the closed L-inf ball of radius epsilon around the original image and
/// onto [0,1]. steps defaults to step_count(epsilon).
AttackResult ifgsm(GradientModel& model, const ImageBatch& images, const SegmentationMask& labels,
                   double epsilon, double alpha, bool targeted,
                   std::optional<int> steps = std::nullopt);

/// Dispatch on spec.family; spec.steps == 0 derives the step count.
AttackResult run_attack(GradientModel& model, const ImageBatch& images,
                        const SegmentationMask& labels, const AttackSpec& spec);

}  // namespace dapas
