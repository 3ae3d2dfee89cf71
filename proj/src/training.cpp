#include "dapas/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "dapas/rng.hpp"

namespace dapas {

std::string to_string(LossKind kind) {
    return kind == LossKind::Mse ? "mse" : "bce";
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "mse") return LossKind::Mse;
    if (s == "bce") return LossKind::Bce;
    throw std::invalid_argument("unknown loss kind '" + s + "'");
}

void TrainConfig::validate() const {
    noise_spec.validate();
    if (clean_probability < 0.0 || clean_probability > 1.0) {
        throw std::invalid_argument("clean_probability must lie in [0,1]");
    }
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write history CSV '" + path.string() + "'");
    out << "epoch,train_loss,val_loss,val_psnr\n";
    for (const EpochRecord& r : records) {
        out << r.epoch << "," << r.train_loss << "," << r.validation_loss << ","
            << r.validation_psnr << "\n";
    }
}

std::pair<ImageBatch, ImageBatch> corrupt_batch(const ImageBatch& images, const NoiseSpec& spec,
                                                double clean_probability, std::uint64_t seed) {
    if (clean_probability < 0.0 || clean_probability > 1.0) {
        throw std::invalid_argument("clean_probability must lie in [0,1]");
    }
    const Shape4 s = images.data.shape;
    RandomStream choice_rng(seed);
    const NoiseTensor noise = sample_noise(spec, s, derive_seed(seed, 0x6e6f6973));

    ImageBatch input = images;
    const std::size_t plane = static_cast<std::size_t>(s.c) * s.h * s.w;
    for (int n = 0; n < s.n; ++n) {
        if (choice_rng.next_uniform01() < clean_probability) continue;  // stays clean
        double* dst = input.data.data.data() + static_cast<std::size_t>(n) * plane;
        const double* nz = noise.data.data.data() + static_cast<std::size_t>(n) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
            dst[i] = std::min(std::max(dst[i] + nz[i], 0.0), 1.0);
        }
    }
    return {std::move(input), images};
}

double reconstruction_loss(const ImageBatch& output, const ImageBatch& target, LossKind kind) {
    if (!output.data.same_shape(target.data)) {
        throw std::invalid_argument("reconstruction_loss: shape mismatch");
    }
    return kind == LossKind::Mse ? nn::mse_loss(output.data, target.data).loss
                                 : nn::bce_loss(output.data, target.data).loss;
}

namespace {

nn::LossGrad loss_and_grad(const Tensor& output, const Tensor& target, LossKind kind) {
    return kind == LossKind::Mse ? nn::mse_loss(output, target) : nn::bce_loss(output, target);
}

struct ValStats {
    double loss = 0.0;
    double psnr = 0.0;
};

ValStats validate_epoch(DAEModel& model, const DatasetHandle& val_set, const TrainConfig& cfg,
                        std::uint64_t noise_seed) {
    ValStats stats;
    double mse_acc = 0.0;
    const std::size_t count = val_set.size();
    for (std::size_t i = 0; i < count; ++i) {
        Sample s = val_set.get(i);
        const NoiseTensor noise =
            sample_noise(cfg.noise_spec, s.image.data.shape, derive_seed(noise_seed, i));
        const ImageBatch noisy = apply_noise(s.image, noise);
        const Tensor out = model.forward(noisy.data);
        stats.loss += loss_and_grad(out, s.image.data, cfg.loss).loss;
        mse_acc += mean_squared_diff(out, s.image.data);
    }
    stats.loss /= static_cast<double>(count);
    mse_acc /= static_cast<double>(count);
    stats.psnr = mse_acc > 0.0 ? 10.0 * std::log10(1.0 / mse_acc)
                               : std::numeric_limits<double>::infinity();
    return stats;
}

}  // namespace

TrainHistory train_dae(DAEModel& model, const DatasetHandle& train_set,
                       const DatasetHandle& val_set, const TrainConfig& config) {
    config.validate();
    if (train_set.size() == 0 || val_set.size() == 0) {
        throw std::invalid_argument("train_dae: empty dataset");
    }

    nn::Adam optimizer(model.params(), config.learning_rate);
    TrainHistory history;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    const int batches_per_epoch =
        static_cast<int>((order.size() + config.batch_size - 1) / config.batch_size);

    std::uint64_t batch_counter = 0;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        RandomStream shuffle_rng(derive_seed(config.seed, 0x73687566 + epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.next_index(i)]);
        }

        double epoch_loss = 0.0;
        for (int b = 0; b < batches_per_epoch; ++b, ++batch_counter) {
            const std::size_t lo = static_cast<std::size_t>(b) * config.batch_size;
            const std::size_t hi = std::min(lo + config.batch_size, order.size());
            const std::vector<std::size_t> indices(order.begin() + lo, order.begin() + hi);
            const Sample batch = train_set.load_batch(indices);

            auto [input, target] = corrupt_batch(batch.image, config.noise_spec,
                                                 config.clean_probability,
                                                 derive_seed(config.seed, batch_counter));

            optimizer.zero_grad();
            const Tensor out = model.forward(input.data);
            const nn::LossGrad lg = loss_and_grad(out, target.data, config.loss);
            if (!std::isfinite(lg.loss)) {
                std::ostringstream os;
                os << "train_dae: loss diverged (non-finite) at epoch " << epoch << ", batch "
                   << b << "; last finite train loss "
                   << (history.records.empty() ? 0.0 : history.records.back().train_loss);
                throw std::runtime_error(os.str());
            }
            model.backward(lg.grad);
            optimizer.step();
            epoch_loss += lg.loss;
        }

        const ValStats val =
            validate_epoch(model, val_set, config, derive_seed(config.seed, 0x76616c00));
        history.records.push_back({epoch, epoch_loss / batches_per_epoch, val.loss, val.psnr});
    }
    return history;
}

DenoiseEval evaluate_denoiser(DAEModel& model, const DatasetHandle& val_set,
                              const NoiseSpec& spec, std::uint64_t seed) {
    if (val_set.size() == 0) throw std::invalid_argument("evaluate_denoiser: empty dataset");
    DenoiseEval eval;
    double mse_noisy_acc = 0.0;
    double mse_out_acc = 0.0;
    for (std::size_t i = 0; i < val_set.size(); ++i) {
        Sample s = val_set.get(i);
        const NoiseTensor noise = sample_noise(spec, s.image.data.shape, derive_seed(seed, i));
        const ImageBatch noisy = apply_noise(s.image, noise);
        const Tensor out = model.forward(noisy.data);
        mse_out_acc += mean_squared_diff(out, s.image.data);
        mse_noisy_acc += mean_squared_diff(noisy.data, s.image.data);
    }
    const double n = static_cast<double>(val_set.size());
    eval.mse_denoised = mse_out_acc / n;
    eval.psnr_denoised = 10.0 * std::log10(1.0 / (mse_out_acc / n));
    eval.psnr_noisy = 10.0 * std::log10(1.0 / (mse_noisy_acc / n));
    return eval;
}

}  // namespace dapas
