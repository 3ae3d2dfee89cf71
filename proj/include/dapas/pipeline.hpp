#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "dapas/attacks.hpp"
#include "dapas/core_types.hpp"
#include "dapas/dae.hpp"
#include "dapas/data.hpp"
#include "dapas/nn.hpp"

#include "json.hpp"

namespace dapas {

/// What a segmenter adapter declares about itself.
struct SegmenterInfo {
    std::pair<int, int> resolution{0, 0};  // expected input resolution; (0,0) = any /32
    std::vector<double> norm_mean;         // per-channel, applied to [0,1] inputs
    std::vector<double> norm_std;
    int num_classes = 0;
    int ignore_index = kDefaultIgnoreIndex;
};

/// A segmentation model behind the toolkit's interface. Inputs are [0,1]
/// image batches; the adapter owns its normalization internally. Also a
/// GradientModel, so attacks can query input gradients.
class Segmenter : public GradientModel {
public:
    virtual SegmenterInfo info() const = 0;

    /// Argmax of predict_logits by default.
    virtual SegmentationMask predict(const ImageBatch& images);
};

/// Purification defense: predict(X) = segmenter.predict(dae.denoise(X)),
/// with nothing between the stages.
class DefendedSegmenter {
public:
    DefendedSegmenter(std::shared_ptr<Purifier> purifier, std::shared_ptr<Segmenter> segmenter)
        : purifier_(std::move(purifier)), segmenter_(std::move(segmenter)) {}

    SegmentationMask predict(const ImageBatch& images);

    Purifier& purifier() { return *purifier_; }
    Segmenter& segmenter() { return *segmenter_; }

private:
    std::shared_ptr<Purifier> purifier_;
    std::shared_ptr<Segmenter> segmenter_;
};

SegmentationMask defended_predict(DefendedSegmenter& defended, const ImageBatch& images);

/// Small encoder-decoder segmentation network standing in for a full-scale
/// model at desk scale: stem conv, two stride-2 conv levels, two
/// deconvolution levels with one additive skip, and a 1x1-equivalent head.
/// ELU activations; logits out. Normalizes inputs internally.
class ReferenceSegmenter final : public Segmenter {
public:
    struct Config {
        int in_channels = 3;
        int base_channels = 16;
        int num_classes = 4;
        int ignore_index = kDefaultIgnoreIndex;

        nlohmann::json to_json() const;
        static Config from_json(const nlohmann::json& j);
    };

    explicit ReferenceSegmenter(const Config& config);

    SegmenterInfo info() const override;
    int num_classes() const override { return config_.num_classes; }
    int ignore_index() const override { return config_.ignore_index; }

    Tensor predict_logits(const ImageBatch& images) override;
    Tensor input_gradient(const ImageBatch& images, const SegmentationMask& labels) override;

    Tensor forward(const Tensor& x);
    /// Backward from d(loss)/d(logits); accumulates parameter gradients and
    /// returns the gradient with respect to the raw [0,1] input.
    Tensor backward(const Tensor& grad_logits);

    std::vector<nn::Param*> params();
    const Config& config() const { return config_; }

private:
    Tensor normalize(const Tensor& x) const;

    Config config_;
    nn::Conv2d stem_;
    nn::Conv2d down1_;
    nn::Conv2d down2_;
    nn::ConvTranspose2d up1_;
    nn::ConvTranspose2d up2_;
    nn::Conv2d head_;
    nn::Elu act_stem_, act_d1_, act_d2_, act_u1_, act_u2_;
    bool skip_used_ = true;

    friend ReferenceSegmenter build_reference_segmenter(const Config&, std::uint64_t);
};

ReferenceSegmenter build_reference_segmenter(const ReferenceSegmenter::Config& config,
                                             std::uint64_t seed);

struct SegTrainConfig {
    double learning_rate = 1e-3;
    int epochs = 30;
    int batch_size = 8;
    std::uint64_t seed = 0;
    double miou_gate = 0.85;  // desk-scale quality gate on the validation set
    // Stop early once validation mIoU reaches this; > 1 trains all epochs.
    double early_stop_miou = 0.88;
};

/// Trains the reference segmenter with pixel-wise cross-entropy (respecting
/// ignore_index). Throws if the final validation mIoU misses the gate,
/// reporting the achieved value.
struct SegTrainResult {
    std::shared_ptr<ReferenceSegmenter> model;
    double val_miou = 0.0;
    int epochs_run = 0;
};
SegTrainResult train_reference_segmenter(const DatasetHandle& train_set,
                                         const DatasetHandle& val_set,
                                         const SegTrainConfig& config);

/// mIoU of a segmenter over a dataset (optionally through a purifier).
double evaluate_miou(Segmenter& segmenter, const DatasetHandle& dataset,
                     Purifier* purifier = nullptr, std::size_t max_images = 0);

/// mIoU over an explicit (images, ground truth) list; used when the images
/// are adversarial copies of the dataset images.
double evaluate_miou_pairs(Segmenter& segmenter, const std::vector<Sample>& pairs,
                           Purifier* purifier = nullptr);

void save_segmenter(const std::filesystem::path& path, ReferenceSegmenter& model,
                    const nlohmann::json& meta = nlohmann::json::object());
std::shared_ptr<ReferenceSegmenter> load_segmenter(const std::filesystem::path& path,
                                                   nlohmann::json* meta_out = nullptr);

}  // namespace dapas
