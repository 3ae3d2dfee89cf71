#include "dapas/dae.hpp"

#include <stdexcept>

#include "dapas/checkpoint.hpp"
#include "dapas/rng.hpp"

namespace dapas {

void DAEConfig::validate() const {
    if (input_channels != 1 && input_channels != 3) {
        throw std::invalid_argument("dae: input_channels must be 1 or 3");
    }
    if (kernel_size != 4) {
        throw std::invalid_argument("dae: kernel_size must be 4 (stride-2 exact halving)");
    }
    for (int c : channel_schedule) {
        if (c < 1) throw std::invalid_argument("dae: channel schedule entries must be >= 1");
    }
    const auto [h, w] = resolution;
    if (h < kResolutionDivisor || w < kResolutionDivisor || h % kResolutionDivisor != 0 ||
        w % kResolutionDivisor != 0) {
        throw std::invalid_argument("dae: resolution " + std::to_string(h) + "x" +
                                    std::to_string(w) + " must be divisible by 32");
    }
}

nlohmann::json DAEConfig::to_json() const {
    return {{"input_channels", input_channels},
            {"base_channels", base_channels},
            {"channel_schedule", channel_schedule},
            {"kernel_size", kernel_size},
            {"resolution", {resolution.first, resolution.second}}};
}

DAEConfig DAEConfig::from_json(const nlohmann::json& j) {
    DAEConfig cfg;
    cfg.input_channels = j.at("input_channels").get<int>();
    cfg.base_channels = j.at("base_channels").get<int>();
    const auto sched = j.at("channel_schedule");
    for (std::size_t i = 0; i < cfg.channel_schedule.size(); ++i) {
        cfg.channel_schedule[i] = sched.at(i).get<int>();
    }
    cfg.kernel_size = j.at("kernel_size").get<int>();
    cfg.resolution = {j.at("resolution").at(0).get<int>(), j.at("resolution").at(1).get<int>()};
    cfg.validate();
    return cfg;
}

DAEModel::DAEModel(const DAEConfig& config) : config_(config) {
    config_.validate();
    const auto& ch = config_.channel_schedule;
    const int k = config_.kernel_size;
    int in_ch = config_.input_channels;
    for (int level = 0; level < 5; ++level) {
        encoder_.emplace_back(in_ch, ch[level], k, 2, 1, "enc" + std::to_string(level + 1));
        in_ch = ch[level];
    }
    // Decoder mirrors the encoder: level i upsamples to the resolution of
    // encoder feature i-1 and matches its channel count so the skip sum at
    // that resolution is well-typed; the last level emits the image.
    for (int level = 4; level >= 0; --level) {
        const int out_ch = level == 0 ? config_.input_channels : ch[level - 1];
        decoder_.emplace_back(ch[level], out_ch, k, 2, 1, "dec" + std::to_string(level + 1));
    }
    encoder_act_.resize(5);
    decoder_act_.resize(4);  // the fifth decoder level ends in the sigmoid
}

std::vector<std::pair<int, int>> DAEModel::encoder_feature_sizes(int h, int w) const {
    std::vector<std::pair<int, int>> sizes;
    for (int level = 0; level < 5; ++level) {
        h /= 2;
        w /= 2;
        sizes.emplace_back(h, w);
    }
    return sizes;
}

Tensor DAEModel::forward(const Tensor& x, bool use_skips) {
    if (x.shape.c != config_.input_channels) {
        throw std::invalid_argument("dae forward: expected " +
                                    std::to_string(config_.input_channels) + " channels, got " +
                                    std::to_string(x.shape.c));
    }
    if (x.shape.h % kResolutionDivisor != 0 || x.shape.w % kResolutionDivisor != 0) {
        throw std::invalid_argument("dae forward: resolution must be divisible by 32");
    }
    skips_used_ = use_skips;
    encoder_features_.clear();
    Tensor cur = x;
    for (int level = 0; level < 5; ++level) {
        cur = encoder_act_[level].forward(encoder_[level].forward(cur));
        encoder_features_.push_back(cur);
    }
    // cur is the bottleneck (encoder feature 5). Decoder level i consumes
    // the sum of the upsampled features and encoder feature 4-i.
    for (int i = 0; i < 5; ++i) {
        if (i > 0) {
            if (use_skips) add_inplace(cur, encoder_features_[4 - i]);
            cur = decoder_act_[i - 1].forward(cur);
        }
        cur = decoder_[i].forward(cur);
    }
    return output_act_.forward(cur);
}

Tensor DAEModel::backward(const Tensor& grad_out) {
    Tensor g = output_act_.backward(grad_out);
    std::vector<Tensor> skip_grads(5);
    for (int i = 4; i >= 0; --i) {
        g = decoder_[i].backward(g);
        if (i > 0) {
            g = decoder_act_[i - 1].backward(g);
            // The skip sum forks the gradient: one branch continues down the
            // decoder, an identical one joins the encoder feature's gradient.
            if (skips_used_) skip_grads[4 - i] = g;
        }
    }
    for (int level = 4; level >= 0; --level) {
        if (skips_used_ && skip_grads[level].numel() > 0 && level < 4) {
            add_inplace(g, skip_grads[level]);
        }
        g = encoder_act_[level].backward(g);
        g = encoder_[level].backward(g);
    }
    return g;
}

ImageBatch DAEModel::denoise(const ImageBatch& images) {
    ImageBatch out{forward(images.data)};
    return out;
}

std::vector<nn::Param*> DAEModel::params() {
    std::vector<nn::Param*> ps;
    for (auto& l : encoder_) {
        ps.push_back(&l.weight);
        ps.push_back(&l.bias);
    }
    for (auto& l : decoder_) {
        ps.push_back(&l.weight);
        ps.push_back(&l.bias);
    }
    return ps;
}

DAEModel build_dae(const DAEConfig& config, std::uint64_t seed) {
    DAEModel model(config);
    RandomStream rng(seed);
    for (auto& l : model.encoder_) l.init_he(rng);
    for (auto& l : model.decoder_) l.init_he(rng);
    return model;
}

ImageBatch denoise(DAEModel& model, const ImageBatch& images) {
    validate_batch(images);
    return model.denoise(images);
}

void save_dae(const std::filesystem::path& path, DAEModel& model, const nlohmann::json& meta) {
    Checkpoint ckpt;
    ckpt.model_kind = "dae";
    ckpt.config = model.config().to_json();
    ckpt.meta = meta;
    for (nn::Param* p : model.params()) {
        ckpt.tensors.emplace_back(p->name, p->value);
    }
    save_checkpoint(path, ckpt);
}

DAEModel load_dae(const std::filesystem::path& path, nlohmann::json* meta_out) {
    const Checkpoint ckpt = load_checkpoint(path);
    if (ckpt.model_kind != "dae") {
        throw std::runtime_error("'" + path.string() + "' holds a " + ckpt.model_kind +
                                 " model, not a dae");
    }
    DAEModel model(DAEConfig::from_json(ckpt.config));
    for (nn::Param* p : model.params()) {
        const Tensor& stored = ckpt.tensor(p->name);
        if (!(stored.shape == p->value.shape)) {
            throw std::runtime_error("checkpoint tensor '" + p->name + "' has shape " +
                                     stored.shape.str() + ", expected " + p->value.shape.str());
        }
        p->value = stored;
    }
    if (meta_out) *meta_out = ckpt.meta;
    return model;
}

}  // namespace dapas
