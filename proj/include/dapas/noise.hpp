#pragma once

#include <cstdint>

#include "dapas/core_types.hpp"
#include "dapas/tensor.hpp"

namespace dapas {

/// Elementwise i.i.d. corruption noise for one image batch shape.
/// Regeneration with identical (spec, shape, seed) is bit-identical.
struct NoiseTensor {
    Tensor data;
    NoiseSpec spec;
    std::uint64_t seed = 0;
};

/// Draws elementwise i.i.d. noise from the declared distribution.
/// Bimodal picks a mixture component per element, then samples the
/// component gaussian.
NoiseTensor sample_noise(const NoiseSpec& spec, const Shape4& shape, std::uint64_t seed);

/// clamp(images + noise, 0, 1). The result satisfies ImageBatch invariants.
ImageBatch apply_noise(const ImageBatch& images, const NoiseTensor& noise);

}  // namespace dapas
