#include "dapas/core_types.hpp"

#include <cmath>
#include <sstream>

namespace dapas {

const ImageBatch& validate_intensities(const ImageBatch& images) {
    const Shape4& s = images.data.shape;
    if (s.n < 1) {
        throw std::invalid_argument("image batch must hold at least one image, got batch " +
                                    std::to_string(s.n));
    }
    if (s.c != 1 && s.c != 3) {
        throw std::invalid_argument("image batch must have 1 or 3 channels, got " +
                                    std::to_string(s.c));
    }
    if (s.h < 1 || s.w < 1) {
        throw std::invalid_argument("image batch resolution must be positive");
    }
    for (double v : images.data.data) {
        if (!(v >= 0.0 && v <= 1.0)) {
            std::ostringstream os;
            os << "image intensity " << v << " outside [0,1]";
            throw std::invalid_argument(os.str());
        }
    }
    return images;
}

const ImageBatch& validate_batch(const ImageBatch& images) {
    validate_intensities(images);
    const Shape4& s = images.data.shape;
    if (s.h < kResolutionDivisor || s.w < kResolutionDivisor ||
        s.h % kResolutionDivisor != 0 || s.w % kResolutionDivisor != 0) {
        std::ostringstream os;
        os << "resolution " << s.h << "x" << s.w << " must be divisible by "
           << kResolutionDivisor;
        throw std::invalid_argument(os.str());
    }
    return images;
}

const SegmentationMask& validate_mask(const SegmentationMask& mask) {
    if (mask.num_classes < 2) {
        throw std::invalid_argument("mask needs num_classes >= 2, got " +
                                    std::to_string(mask.num_classes));
    }
    if (mask.labels.size() != static_cast<std::size_t>(mask.numel())) {
        throw std::invalid_argument("mask label storage does not match its shape");
    }
    for (std::int32_t v : mask.labels) {
        if (v == mask.ignore_index) continue;
        if (v < 0 || v >= mask.num_classes) {
            throw std::invalid_argument("mask label " + std::to_string(v) +
                                        " outside [0," + std::to_string(mask.num_classes) +
                                        ") and not the ignore index");
        }
    }
    return mask;
}

void validate_pair(const ImageBatch& images, const SegmentationMask& mask) {
    if (images.batch() != mask.n || images.height() != mask.h || images.width() != mask.w) {
        throw std::invalid_argument("mask shape does not match image batch shape");
    }
}

std::string to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::Gaussian: return "gaussian";
        case NoiseKind::Uniform: return "uniform";
        case NoiseKind::Bimodal: return "bimodal";
    }
    return "unknown";
}

NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "gaussian") return NoiseKind::Gaussian;
    if (s == "uniform") return NoiseKind::Uniform;
    if (s == "bimodal") return NoiseKind::Bimodal;
    throw std::invalid_argument("unknown noise kind '" + s + "'");
}

NoiseSpec NoiseSpec::gaussian(double mean, double std) {
    NoiseSpec spec;
    spec.kind = NoiseKind::Gaussian;
    spec.mean = mean;
    spec.std = std;
    spec.validate();
    return spec;
}

NoiseSpec NoiseSpec::uniform(double low, double high) {
    NoiseSpec spec;
    spec.kind = NoiseKind::Uniform;
    spec.low = low;
    spec.high = high;
    spec.validate();
    return spec;
}

NoiseSpec NoiseSpec::bimodal(double center_lo, double center_hi, double std,
                             double weight_lo, double weight_hi) {
    NoiseSpec spec;
    spec.kind = NoiseKind::Bimodal;
    spec.mode_centers = {center_lo, center_hi};
    spec.mode_weights = {weight_lo, weight_hi};
    spec.std = std;
    spec.validate();
    return spec;
}

void NoiseSpec::validate() const {
    switch (kind) {
        case NoiseKind::Gaussian:
            if (!(std > 0.0) || !std::isfinite(std) || !std::isfinite(mean)) {
                throw std::invalid_argument("gaussian noise needs finite mean and std > 0");
            }
            break;
        case NoiseKind::Uniform:
            if (!(low < high) || !std::isfinite(low) || !std::isfinite(high)) {
                throw std::invalid_argument("uniform noise needs low < high");
            }
            break;
        case NoiseKind::Bimodal: {
            if (!(std > 0.0)) {
                throw std::invalid_argument("bimodal noise needs per-mode std > 0");
            }
            const double w0 = mode_weights.first;
            const double w1 = mode_weights.second;
            if (w0 < 0.0 || w1 < 0.0 || std::abs(w0 + w1 - 1.0) > 1e-12) {
                throw std::invalid_argument(
                    "bimodal mode weights must be non-negative and sum to 1");
            }
            if (!std::isfinite(mode_centers.first) || !std::isfinite(mode_centers.second)) {
                throw std::invalid_argument("bimodal mode centers must be finite");
            }
            break;
        }
    }
}

std::string to_string(AttackFamily family) {
    return family == AttackFamily::Fgsm ? "fgsm" : "ifgsm";
}

AttackFamily attack_family_from_string(const std::string& s) {
    if (s == "fgsm") return AttackFamily::Fgsm;
    if (s == "ifgsm") return AttackFamily::Ifgsm;
    throw std::invalid_argument("unknown attack family '" + s + "'");
}

void AttackSpec::validate() const {
    if (!(epsilon > 0.0) || epsilon > 1.0) {
        throw std::invalid_argument("attack epsilon must lie in (0, 1]");
    }
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("attack alpha must be > 0");
    }
    if (steps < 0) {
        throw std::invalid_argument("attack step count cannot be negative");
    }
    if (family == AttackFamily::Fgsm && steps > 1) {
        throw std::invalid_argument("fgsm is single-step; steps must be 1 (or 0 to derive)");
    }
}

}  // namespace dapas
