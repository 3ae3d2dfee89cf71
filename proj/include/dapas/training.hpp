#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dapas/core_types.hpp"
#include "dapas/dae.hpp"
#include "dapas/data.hpp"
#include "dapas/noise.hpp"

namespace dapas {

enum class LossKind { Mse, Bce };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& s);

/// Training recipe for the denoiser. The optimizer is Adam with the
/// conventional moment defaults; only the learning rate is configurable.
struct TrainConfig {
    NoiseSpec noise_spec = NoiseSpec::gaussian();
    double clean_probability = 0.5;
    double learning_rate = 5e-4;
    int epochs = 20;
    int batch_size = 8;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::Mse;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
    double validation_psnr = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> records;

    void write_csv(const std::filesystem::path& path) const;
};

/// Per-sample Bernoulli(clean_probability) choice between the clean image
/// and a freshly-noised copy. The target is always the clean image.
std::pair<ImageBatch, ImageBatch> corrupt_batch(const ImageBatch& images, const NoiseSpec& spec,
                                                double clean_probability, std::uint64_t seed);

/// mse = mean squared difference; bce = mean binary cross-entropy treating
/// intensities as probabilities.
double reconstruction_loss(const ImageBatch& output, const ImageBatch& target, LossKind kind);

/// Trains the DAE to map clean and corrupted inputs to the clean image.
/// Deterministic under config.seed. Throws on an empty dataset and aborts
/// with a diagnostic if the loss stops being finite.
TrainHistory train_dae(DAEModel& model, const DatasetHandle& train_set,
                       const DatasetHandle& val_set, const TrainConfig& config);

/// Validation-set statistics of a denoiser against clean targets under a
/// fixed noise draw: (mse over noisy inputs, psnr of denoised vs clean,
/// psnr of noisy vs clean).
struct DenoiseEval {
    double mse_denoised = 0.0;
    double psnr_denoised = 0.0;
    double psnr_noisy = 0.0;
};
DenoiseEval evaluate_denoiser(DAEModel& model, const DatasetHandle& val_set,
                              const NoiseSpec& spec, std::uint64_t seed);

}  // namespace dapas
