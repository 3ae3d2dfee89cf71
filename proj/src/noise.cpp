#include "dapas/noise.hpp"

#include "dapas/rng.hpp"

namespace dapas {

NoiseTensor sample_noise(const NoiseSpec& spec, const Shape4& shape, std::uint64_t seed) {
    spec.validate();
    if (shape.numel() <= 0) {
        throw std::invalid_argument("sample_noise: empty shape " + shape.str());
    }
    NoiseTensor noise;
    noise.data = Tensor(shape);
    noise.spec = spec;
    noise.seed = seed;

    RandomStream rng(seed);
    switch (spec.kind) {
        case NoiseKind::Gaussian:
            for (double& v : noise.data.data) v = rng.next_normal(spec.mean, spec.std);
            break;
        case NoiseKind::Uniform:
            for (double& v : noise.data.data) v = rng.next_uniform(spec.low, spec.high);
            break;
        case NoiseKind::Bimodal:
            for (double& v : noise.data.data) {
                const bool first = rng.next_uniform01() < spec.mode_weights.first;
                const double center = first ? spec.mode_centers.first : spec.mode_centers.second;
                v = rng.next_normal(center, spec.std);
            }
            break;
    }
    return noise;
}

ImageBatch apply_noise(const ImageBatch& images, const NoiseTensor& noise) {
    if (!images.data.same_shape(noise.data)) {
        throw std::invalid_argument("apply_noise: noise shape " + noise.data.shape.str() +
                                    " does not match image shape " + images.data.shape.str());
    }
    ImageBatch out = images;
    add_inplace(out.data, noise.data);
    clamp_inplace(out.data, 0.0, 1.0);
    return out;
}

}  // namespace dapas
