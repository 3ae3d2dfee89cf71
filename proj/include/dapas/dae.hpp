#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "dapas/core_types.hpp"
#include "dapas/nn.hpp"

#include "json.hpp"

namespace dapas {

/// Denoiser front-end contract: maps an image batch to a purified batch of
/// the same shape.
class Purifier {
public:
    virtual ~Purifier() = default;
    virtual ImageBatch denoise(const ImageBatch& images) = 0;
};

/// Passes images through untouched. Useful as a defense-off baseline.
class IdentityPurifier final : public Purifier {
public:
    ImageBatch denoise(const ImageBatch& images) override { return images; }
};

/// Architecture of the denoising autoencoder: a five-level stride-2
/// convolution encoder and a five-level deconvolution decoder. The channel
/// schedule is per encoder level; the decoder mirrors it. The paper fixes
/// layer counts and the stride-based resizing but not channel widths; the
/// default schedule doubles from base_channels and caps at 8x.
struct DAEConfig {
    int input_channels = 3;
    int base_channels = 64;
    std::array<int, 5> channel_schedule{64, 128, 256, 512, 512};
    int kernel_size = 4;
    std::pair<int, int> resolution{64, 64};

    static std::array<int, 5> schedule_from_base(int base) {
        return {base, 2 * base, 4 * base, 8 * base, 8 * base};
    }

    void validate() const;
    nlohmann::json to_json() const;
    static DAEConfig from_json(const nlohmann::json& j);
};

/// The denoising autoencoder. Hidden activations are ELU, the output is a
/// sigmoid, and the decoder input at each level is the elementwise sum of
/// the upsampled features and the encoder features of equal resolution.
/// The raw input image is not skip-connected.
class DAEModel final : public Purifier {
public:
    explicit DAEModel(const DAEConfig& config);

    const DAEConfig& config() const { return config_; }
    std::uint32_t version() const { return version_; }

    /// Forward pass; accepts any resolution divisible by 32, independent of
    /// the configured one. use_skips=false zeroes the skip paths (ablation
    /// hook for tests).
    Tensor forward(const Tensor& x, bool use_skips = true);

    /// Backward pass from d(loss)/d(output); accumulates parameter
    /// gradients and returns the input gradient.
    Tensor backward(const Tensor& grad_out);

    ImageBatch denoise(const ImageBatch& images) override;

    /// Spatial sizes of the five encoder feature maps for a given input
    /// resolution, e.g. 64 -> {32, 16, 8, 4, 2}.
    std::vector<std::pair<int, int>> encoder_feature_sizes(int h, int w) const;

    std::vector<nn::Param*> params();

private:
    DAEConfig config_;
    std::uint32_t version_ = 1;

    std::vector<nn::Conv2d> encoder_;
    std::vector<nn::ConvTranspose2d> decoder_;
    std::vector<nn::Elu> encoder_act_;
    std::vector<nn::Elu> decoder_act_;
    nn::Sigmoid output_act_;

    // Forward caches for the skip-sum backward.
    std::vector<Tensor> encoder_features_;
    bool skips_used_ = true;

    friend DAEModel build_dae(const DAEConfig&, std::uint64_t);
};

/// Builds a DAE with He-initialized weights; deterministic under seed.
DAEModel build_dae(const DAEConfig& config, std::uint64_t seed);

/// Shape-validating wrapper around DAEModel::denoise.
ImageBatch denoise(DAEModel& model, const ImageBatch& images);

/// Checkpoint I/O. meta carries free-form provenance (noise spec, seeds).
void save_dae(const std::filesystem::path& path, DAEModel& model,
              const nlohmann::json& meta = nlohmann::json::object());
DAEModel load_dae(const std::filesystem::path& path, nlohmann::json* meta_out = nullptr);

}  // namespace dapas
