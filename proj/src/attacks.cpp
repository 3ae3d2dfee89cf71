#include "dapas/attacks.hpp"

#include <algorithm>
#include <cmath>

namespace dapas {

int step_count(double epsilon) {
    if (!(epsilon > 0.0) || epsilon > 1.0) {
        throw std::invalid_argument("step_count: epsilon must lie in (0, 1]");
    }
    const double eps255 = 255.0 * epsilon;
    const double raw = epsilon <= 0.008 ? std::min(eps255 + 2.0, 4.0 * eps255)
                                        : std::min(eps255 + 4.0, 1.24 * eps255);
    return std::max(1, static_cast<int>(std::lround(raw)));
}

namespace {

void check_attack_inputs(const ImageBatch& images, const SegmentationMask& labels) {
    validate_intensities(images);
    validate_pair(images, labels);
}

// x += step * sign(g), elementwise; sign(0) = 0.
void add_sign_step(Tensor& x, const Tensor& g, double step) {
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double gv = g.data[i];
        if (gv > 0.0) {
            x.data[i] += step;
        } else if (gv < 0.0) {
            x.data[i] -= step;
        }
    }
}

// Project onto the closed eps-ball around the original, then onto [0,1].
// The original is itself in [0,1], so both constraints hold afterwards.
void project(Tensor& x, const Tensor& original, double eps) {
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double o = original.data[i];
        double v = std::min(std::max(x.data[i], o - eps), o + eps);
        x.data[i] = std::min(std::max(v, 0.0), 1.0);
    }
}

AttackResult finish(ImageBatch adversarial, const ImageBatch& original, AttackSpec spec) {
    AttackResult result;
    result.linf_delta = linf_diff(adversarial.data, original.data);
    result.adversarial = std::move(adversarial);
    result.original = original;
    result.spec = spec;
    return result;
}

}  // namespace

AttackResult fgsm(GradientModel& model, const ImageBatch& images, const SegmentationMask& labels,
                  double epsilon, bool targeted) {
    check_attack_inputs(images, labels);
    if (epsilon < 0.0) throw std::invalid_argument("fgsm: epsilon must be >= 0");

    AttackSpec spec{AttackFamily::Fgsm, epsilon, epsilon, targeted, 1};
    if (epsilon == 0.0) {
        return finish(images, images, spec);
    }
    const Tensor grad = model.input_gradient(images, labels);
    if (!grad.same_shape(images.data)) {
        throw std::runtime_error("fgsm: model returned gradient of wrong shape");
    }
    ImageBatch adv = images;
    add_sign_step(adv.data, grad, targeted ? -epsilon : epsilon);
    clamp_inplace(adv.data, 0.0, 1.0);
    return finish(std::move(adv), images, spec);
}

AttackResult ifgsm(GradientModel& model, const ImageBatch& images, const SegmentationMask& labels,
                   double epsilon, double alpha, bool targeted, std::optional<int> steps) {
    check_attack_inputs(images, labels);
    if (epsilon < 0.0) throw std::invalid_argument("ifgsm: epsilon must be >= 0");
    if (!(alpha > 0.0)) throw std::invalid_argument("ifgsm: alpha must be > 0");

    const int n_steps = steps ? *steps : (epsilon > 0.0 ? step_count(epsilon) : 1);
    if (n_steps < 1) throw std::invalid_argument("ifgsm: steps must be >= 1");

    AttackSpec spec{AttackFamily::Ifgsm, epsilon, alpha, targeted, n_steps};
    if (epsilon == 0.0) {
        return finish(images, images, spec);
    }
    ImageBatch adv = images;
    for (int t = 0; t < n_steps; ++t) {
        const Tensor grad = model.input_gradient(adv, labels);
        if (!grad.same_shape(images.data)) {
            throw std::runtime_error("ifgsm: model returned gradient of wrong shape");
        }
        add_sign_step(adv.data, grad, targeted ? -alpha : alpha);
        project(adv.data, images.data, epsilon);
    }
    return finish(std::move(adv), images, spec);
}

AttackResult run_attack(GradientModel& model, const ImageBatch& images,
                        const SegmentationMask& labels, const AttackSpec& spec) {
    spec.validate();
    if (spec.family == AttackFamily::Fgsm) {
        return fgsm(model, images, labels, spec.epsilon, spec.targeted);
    }
    return ifgsm(model, images, labels, spec.epsilon, spec.alpha, spec.targeted,
                 spec.steps > 0 ? std::optional<int>(spec.steps) : std::nullopt);
}

}  // namespace dapas
