#include "dapas/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dapas/checkpoint.hpp"
#include "dapas/metrics.hpp"
#include "dapas/rng.hpp"

namespace dapas {

namespace {
constexpr double kNormMean = 0.5;
constexpr double kNormStd = 0.25;
}  // namespace

SegmentationMask Segmenter::predict(const ImageBatch& images) {
    const Tensor logits = predict_logits(images);
    return nn::argmax_classes(logits, num_classes(), ignore_index());
}

SegmentationMask DefendedSegmenter::predict(const ImageBatch& images) {
    return segmenter_->predict(purifier_->denoise(images));
}

SegmentationMask defended_predict(DefendedSegmenter& defended, const ImageBatch& images) {
    return defended.predict(images);
}

nlohmann::json ReferenceSegmenter::Config::to_json() const {
    return {{"in_channels", in_channels},
            {"base_channels", base_channels},
            {"num_classes", num_classes},
            {"ignore_index", ignore_index}};
}

ReferenceSegmenter::Config ReferenceSegmenter::Config::from_json(const nlohmann::json& j) {
    Config cfg;
    cfg.in_channels = j.at("in_channels").get<int>();
    cfg.base_channels = j.at("base_channels").get<int>();
    cfg.num_classes = j.at("num_classes").get<int>();
    cfg.ignore_index = j.at("ignore_index").get<int>();
    return cfg;
}

ReferenceSegmenter::ReferenceSegmenter(const Config& config)
    : config_(config),
      stem_(config.in_channels, config.base_channels, 3, 1, 1, "stem"),
      down1_(config.base_channels, 2 * config.base_channels, 4, 2, 1, "down1"),
      down2_(2 * config.base_channels, 4 * config.base_channels, 4, 2, 1, "down2"),
      up1_(4 * config.base_channels, 2 * config.base_channels, 4, 2, 1, "up1"),
      up2_(2 * config.base_channels, config.base_channels, 4, 2, 1, "up2"),
      head_(config.base_channels, config.num_classes, 3, 1, 1, "head") {
    if (config.num_classes < 2) {
        throw std::invalid_argument("reference segmenter needs num_classes >= 2");
    }
}

SegmenterInfo ReferenceSegmenter::info() const {
    SegmenterInfo info;
    info.resolution = {0, 0};  // any resolution divisible by 32
    info.norm_mean.assign(config_.in_channels, kNormMean);
    info.norm_std.assign(config_.in_channels, kNormStd);
    info.num_classes = config_.num_classes;
    info.ignore_index = config_.ignore_index;
    return info;
}

Tensor ReferenceSegmenter::normalize(const Tensor& x) const {
    Tensor out = x;
    for (double& v : out.data) v = (v - kNormMean) / kNormStd;
    return out;
}

Tensor ReferenceSegmenter::forward(const Tensor& x) {
    Tensor cur = normalize(x);
    cur = act_stem_.forward(stem_.forward(cur));
    const Tensor d1 = act_d1_.forward(down1_.forward(cur));
    cur = act_d2_.forward(down2_.forward(d1));
    cur = act_u1_.forward(up1_.forward(cur));
    add_inplace(cur, d1);  // skip keeps boundary detail at half resolution
    cur = act_u2_.forward(up2_.forward(cur));
    return head_.forward(cur);
}

Tensor ReferenceSegmenter::backward(const Tensor& grad_logits) {
    Tensor g = head_.backward(grad_logits);
    g = act_u2_.backward(g);
    g = up2_.backward(g);
    const Tensor skip_grad = g;  // branch into the d1 feature
    g = act_u1_.backward(g);
    g = up1_.backward(g);
    g = act_d2_.backward(g);
    g = down2_.backward(g);
    add_inplace(g, skip_grad);
    g = act_d1_.backward(g);
    g = down1_.backward(g);
    g = act_stem_.backward(g);
    g = stem_.backward(g);
    // Undo the input normalization scale.
    scale_inplace(g, 1.0 / kNormStd);
    return g;
}

Tensor ReferenceSegmenter::predict_logits(const ImageBatch& images) {
    return forward(images.data);
}

Tensor ReferenceSegmenter::input_gradient(const ImageBatch& images,
                                          const SegmentationMask& labels) {
    const Tensor logits = forward(images.data);
    const nn::LossGrad lg = nn::softmax_cross_entropy(logits, labels);
    return backward(lg.grad);
}

std::vector<nn::Param*> ReferenceSegmenter::params() {
    return {&stem_.weight, &stem_.bias, &down1_.weight, &down1_.bias,
            &down2_.weight, &down2_.bias, &up1_.weight, &up1_.bias,
            &up2_.weight, &up2_.bias, &head_.weight, &head_.bias};
}

ReferenceSegmenter build_reference_segmenter(const ReferenceSegmenter::Config& config,
                                             std::uint64_t seed) {
    ReferenceSegmenter model(config);
    RandomStream rng(seed);
    model.stem_.init_he(rng);
    model.down1_.init_he(rng);
    model.down2_.init_he(rng);
    model.up1_.init_he(rng);
    model.up2_.init_he(rng);
    model.head_.init_he(rng);
    return model;
}

SegTrainResult train_reference_segmenter(const DatasetHandle& train_set,
                                         const DatasetHandle& val_set,
                                         const SegTrainConfig& config) {
    if (train_set.size() == 0 || val_set.size() == 0) {
        throw std::invalid_argument("train_reference_segmenter: empty dataset");
    }
    if (train_set.num_classes() < 2) {
        throw std::invalid_argument("train_reference_segmenter: dataset needs num_classes >= 2");
    }

    ReferenceSegmenter::Config mc;
    mc.num_classes = train_set.num_classes();
    mc.ignore_index = train_set.ignore_index();
    auto model = std::make_shared<ReferenceSegmenter>(
        build_reference_segmenter(mc, derive_seed(config.seed, 0x696e6974)));

    nn::Adam optimizer(model->params(), config.learning_rate);

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    const int batches_per_epoch =
        static_cast<int>((order.size() + config.batch_size - 1) / config.batch_size);

    SegTrainResult result;
    result.model = model;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        RandomStream shuffle_rng(derive_seed(config.seed, 0x73656700 + epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.next_index(i)]);
        }
        for (int b = 0; b < batches_per_epoch; ++b) {
            const std::size_t lo = static_cast<std::size_t>(b) * config.batch_size;
            const std::size_t hi = std::min(lo + config.batch_size, order.size());
            const Sample batch =
                train_set.load_batch({order.begin() + lo, order.begin() + hi});
            optimizer.zero_grad();
            const Tensor logits = model->forward(batch.image.data);
            const nn::LossGrad lg = nn::softmax_cross_entropy(logits, batch.mask);
            if (!std::isfinite(lg.loss)) {
                throw std::runtime_error("train_reference_segmenter: loss diverged at epoch " +
                                         std::to_string(epoch));
            }
            model->backward(lg.grad);
            optimizer.step();
        }
        result.epochs_run = epoch;
        result.val_miou = evaluate_miou(*model, val_set);
        if (result.val_miou >= config.early_stop_miou) break;
    }

    if (result.val_miou < config.miou_gate) {
        std::ostringstream os;
        os << "reference segmenter missed the quality gate: achieved mIoU " << result.val_miou
           << " < " << config.miou_gate << " after " << result.epochs_run << " epochs";
        throw std::runtime_error(os.str());
    }
    return result;
}

double evaluate_miou(Segmenter& segmenter, const DatasetHandle& dataset, Purifier* purifier,
                     std::size_t max_images) {
    const std::size_t count =
        max_images == 0 ? dataset.size() : std::min(max_images, dataset.size());
    if (count == 0) throw std::invalid_argument("evaluate_miou: empty dataset");
    ConfusionAccumulator acc(dataset.num_classes(), dataset.ignore_index());
    for (std::size_t i = 0; i < count; ++i) {
        Sample s = dataset.get(i);
        const ImageBatch input = purifier ? purifier->denoise(s.image) : s.image;
        acc.accumulate(segmenter.predict(input), s.mask);
    }
    return miou(acc);
}

double evaluate_miou_pairs(Segmenter& segmenter, const std::vector<Sample>& pairs,
                           Purifier* purifier) {
    if (pairs.empty()) throw std::invalid_argument("evaluate_miou_pairs: no samples");
    ConfusionAccumulator acc(pairs.front().mask.num_classes, pairs.front().mask.ignore_index);
    for (const Sample& s : pairs) {
        const ImageBatch input = purifier ? purifier->denoise(s.image) : s.image;
        acc.accumulate(segmenter.predict(input), s.mask);
    }
    return miou(acc);
}

void save_segmenter(const std::filesystem::path& path, ReferenceSegmenter& model,
                    const nlohmann::json& meta) {
    Checkpoint ckpt;
    ckpt.model_kind = "reference_segmenter";
    ckpt.config = model.config().to_json();
    ckpt.meta = meta;
    for (nn::Param* p : model.params()) {
        ckpt.tensors.emplace_back(p->name, p->value);
    }
    save_checkpoint(path, ckpt);
}

std::shared_ptr<ReferenceSegmenter> load_segmenter(const std::filesystem::path& path,
                                                   nlohmann::json* meta_out) {
    const Checkpoint ckpt = load_checkpoint(path);
    if (ckpt.model_kind != "reference_segmenter") {
        throw std::runtime_error("'" + path.string() + "' holds a " + ckpt.model_kind +
                                 " model, not a reference_segmenter");
    }
    auto model = std::make_shared<ReferenceSegmenter>(
        ReferenceSegmenter::Config::from_json(ckpt.config));
    for (nn::Param* p : model->params()) {
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
