#include "dapas/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dapas/rng.hpp"

namespace dapas {

Sample DatasetHandle::load_batch(const std::vector<std::size_t>& indices) const {
    if (indices.empty()) {
        throw std::invalid_argument("load_batch: empty index list");
    }
    const Sample first = get(indices[0]);
    const Shape4 s = first.image.data.shape;
    Sample out;
    out.image = ImageBatch(Tensor({static_cast<int>(indices.size()), s.c, s.h, s.w}));
    out.mask = SegmentationMask(static_cast<int>(indices.size()), s.h, s.w,
                                first.mask.num_classes, first.mask.ignore_index);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const Sample item = i == 0 ? first : get(indices[i]);
        std::copy(item.image.data.data.begin(), item.image.data.data.end(),
                  out.image.data.data.begin() + static_cast<std::ptrdiff_t>(i) * s.c * s.h * s.w);
        std::copy(item.mask.labels.begin(), item.mask.labels.end(),
                  out.mask.labels.begin() + static_cast<std::ptrdiff_t>(i) * s.h * s.w);
    }
    return out;
}

namespace {

struct Rgb {
    double r, g, b;
};

// Saturated hue-wheel color for a shape class; value/saturation jitter comes
// from the caller. Hue in degrees.
Rgb hsv_to_rgb(double hue_deg, double sat, double val) {
    const double c = val * sat;
    const double hp = hue_deg / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0.0, g = 0.0, b = 0.0;
    if (hp < 1.0) {
        r = c; g = x;
    } else if (hp < 2.0) {
        r = x; g = c;
    } else if (hp < 3.0) {
        g = c; b = x;
    } else if (hp < 4.0) {
        g = x; b = c;
    } else if (hp < 5.0) {
        r = x; b = c;
    } else {
        r = c; b = x;
    }
    const double m = val - c;
    return {r + m, g + m, b + m};
}

struct ShapeInstance {
    int kind = 0;  // 0 rect, 1 circle, 2 triangle
    int cls = 1;
    double cx = 0.0, cy = 0.0;
    double rx = 0.0, ry = 0.0;
    Rgb color{};

    bool contains(double x, double y) const {
        const double dx = x - cx;
        const double dy = y - cy;
        switch (kind) {
            case 0:
                return std::abs(dx) <= rx && std::abs(dy) <= ry;
            case 1:
                return (dx * dx) / (rx * rx) + (dy * dy) / (ry * ry) <= 1.0;
            default: {
                // Upward isoceles triangle inscribed in the bounding box.
                if (dy < -ry || dy > ry) return false;
                const double t = (dy + ry) / (2.0 * ry);  // 0 at apex, 1 at base
                return std::abs(dx) <= rx * t;
            }
        }
    }
};

class SyntheticShapes final : public DatasetHandle {
public:
    SyntheticShapes(int count, std::pair<int, int> resolution, int num_classes,
                    std::uint64_t seed)
        : count_(count), h_(resolution.first), w_(resolution.second),
          num_classes_(num_classes), seed_(seed) {
        if (count < 1) throw std::invalid_argument("synth_shapes: count must be >= 1");
        if (num_classes < 2) throw std::invalid_argument("synth_shapes: num_classes must be >= 2");
        if (h_ % kResolutionDivisor != 0 || w_ % kResolutionDivisor != 0) {
            throw std::invalid_argument("synth_shapes: resolution must be divisible by 32");
        }
    }

    std::size_t size() const override { return static_cast<std::size_t>(count_); }

    std::string source() const override { return "synthetic"; }
    std::pair<int, int> resolution() const override { return {h_, w_}; }
    int num_classes() const override { return num_classes_; }
    int ignore_index() const override { return kDefaultIgnoreIndex; }

    Sample get(std::size_t index) const override {
        if (index >= size()) throw std::out_of_range("synth_shapes: index out of range");
        RandomStream rng(derive_seed(seed_, index));

        Sample s;
        s.image = ImageBatch(Tensor({1, 3, h_, w_}));
        s.mask = SegmentationMask(1, h_, w_, num_classes_, kDefaultIgnoreIndex);

        // Smoothly shaded gray background: a planar gradient plus a
        // low-frequency sinusoid, shared across channels so the background
        // channel spread is exactly zero.
        const double base = rng.next_uniform(0.38, 0.52);
        const double slope_x = rng.next_uniform(-0.08, 0.08);
        const double slope_y = rng.next_uniform(-0.08, 0.08);
        const double amp = rng.next_uniform(0.02, 0.05);
        const double fx = (1.0 + rng.next_index(3)) * 6.283185307179586 / w_;
        const double fy = (1.0 + rng.next_index(3)) * 6.283185307179586 / h_;
        const double phase_x = rng.next_uniform(0.0, 6.283185307179586);
        const double phase_y = rng.next_uniform(0.0, 6.283185307179586);
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                const double u = static_cast<double>(x) / w_ - 0.5;
                const double v = static_cast<double>(y) / h_ - 0.5;
                const double shade = base + slope_x * u + slope_y * v +
                                     amp * std::sin(fx * x + phase_x) *
                                         std::sin(fy * y + phase_y);
                for (int c = 0; c < 3; ++c) {
                    s.image.data.at(0, c, y, x) = shade;
                }
            }
        }

        const int shape_count = 1 + static_cast<int>(rng.next_index(4));
        std::vector<ShapeInstance> shapes(shape_count);
        for (ShapeInstance& sh : shapes) {
            sh.cls = 1 + static_cast<int>(rng.next_index(num_classes_ - 1));
            sh.kind = (sh.cls - 1) % 3;
            sh.cx = rng.next_uniform(0.15, 0.85) * w_;
            sh.cy = rng.next_uniform(0.15, 0.85) * h_;
            sh.rx = rng.next_uniform(0.10, 0.24) * w_;
            sh.ry = rng.next_uniform(0.10, 0.24) * h_;
            const double hue = 360.0 * (sh.cls - 1) / (num_classes_ - 1);
            const double sat = rng.next_uniform(0.65, 0.95);
            const double val = rng.next_uniform(0.60, 0.90);
            sh.color = hsv_to_rgb(hue, sat, val);
        }

        // Later shapes draw over earlier ones; color and label always come
        // from the same pass, so the mask matches the rendering exactly.
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                for (const ShapeInstance& sh : shapes) {
                    if (sh.contains(x + 0.5, y + 0.5)) {
                        s.image.data.at(0, 0, y, x) = sh.color.r;
                        s.image.data.at(0, 1, y, x) = sh.color.g;
                        s.image.data.at(0, 2, y, x) = sh.color.b;
                        s.mask.at(0, y, x) = sh.cls;
                    }
                }
            }
        }
        clamp_inplace(s.image.data, 0.0, 1.0);
        return s;
    }

private:
    int count_;
    int h_, w_;
    int num_classes_;
    std::uint64_t seed_;
};

class VocDataset final : public DatasetHandle {
public:
    VocDataset(std::filesystem::path root, Split split, std::pair<int, int> resolution,
               int num_classes, int ignore_index)
        : root_(std::move(root)), h_(resolution.first), w_(resolution.second),
          num_classes_(num_classes), ignore_index_(ignore_index) {
        if (h_ % kResolutionDivisor != 0 || w_ % kResolutionDivisor != 0) {
            throw std::invalid_argument("load_voc_dir: target resolution must be divisible by 32");
        }
        const auto list = root_ / "splits" / (split == Split::Train ? "train.txt" : "val.txt");
        std::ifstream in(list);
        if (!in) {
            throw std::runtime_error("missing split list '" + list.string() + "'");
        }
        std::string stem;
        while (std::getline(in, stem)) {
            while (!stem.empty() && (stem.back() == '\r' || stem.back() == ' ')) stem.pop_back();
            if (stem.empty()) continue;
            stems_.push_back(stem);
        }
        if (stems_.empty()) {
            throw std::runtime_error("split list '" + list.string() + "' is empty");
        }
        for (const std::string& st : stems_) {
            image_paths_.push_back(find_image(st));
            const auto mask = root_ / "masks" / (st + ".png");
            if (!std::filesystem::exists(mask)) {
                throw std::runtime_error("missing mask for stem '" + st + "'");
            }
            mask_paths_.push_back(mask);
        }
    }

    std::size_t size() const override { return stems_.size(); }

    std::string source() const override { return "voc_dir"; }
    std::pair<int, int> resolution() const override { return {h_, w_}; }
    int num_classes() const override { return num_classes_; }
    int ignore_index() const override { return ignore_index_; }

    Sample get(std::size_t index) const override {
        if (index >= size()) throw std::out_of_range("voc dataset: index out of range");
        RawImage img = read_image(image_paths_[index]);
        if (img.channels == 1) {
            // Promote grayscale photographs to RGB.
            RawImage rgb;
            rgb.h = img.h;
            rgb.w = img.w;
            rgb.channels = 3;
            rgb.pixels.resize(img.pixels.size() * 3);
            for (std::size_t i = 0; i < img.pixels.size(); ++i) {
                rgb.pixels[3 * i] = rgb.pixels[3 * i + 1] = rgb.pixels[3 * i + 2] = img.pixels[i];
            }
            img = std::move(rgb);
        }
        img = resize_bilinear(img, h_, w_);

        RawImage mask_raw = read_png(mask_paths_[index]);
        if (mask_raw.channels != 1) {
            throw std::runtime_error("mask '" + mask_paths_[index].string() +
                                     "' must be 8-bit single-channel PNG");
        }
        SegmentationMask mask = raw_to_mask(mask_raw, num_classes_, ignore_index_);
        validate_mask(mask);
        mask = resize_nearest(mask, h_, w_);

        Sample s;
        s.image = raw_to_image(img);
        s.mask = std::move(mask);
        return s;
    }

private:
    std::filesystem::path find_image(const std::string& stem) const {
        for (const char* ext : {".png", ".jpg", ".jpeg"}) {
            const auto p = root_ / "images" / (stem + ext);
            if (std::filesystem::exists(p)) return p;
        }
        throw std::runtime_error("missing image for stem '" + stem + "'");
    }

    std::filesystem::path root_;
    int h_, w_;
    int num_classes_;
    int ignore_index_;
    std::vector<std::string> stems_;
    std::vector<std::filesystem::path> image_paths_;
    std::vector<std::filesystem::path> mask_paths_;
};

}  // namespace

std::shared_ptr<DatasetHandle> synth_shapes(int count, std::pair<int, int> resolution,
                                            int num_classes, std::uint64_t seed) {
    return std::make_shared<SyntheticShapes>(count, resolution, num_classes, seed);
}

std::shared_ptr<DatasetHandle> load_voc_dir(const std::filesystem::path& root, Split split,
                                            std::pair<int, int> resolution, int num_classes,
                                            int ignore_index) {
    return std::make_shared<VocDataset>(root, split, resolution, num_classes, ignore_index);
}

std::vector<std::uint8_t> to_bytes(const ImageBatch& images) {
    std::vector<std::uint8_t> out(images.data.data.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = std::min(std::max(images.data.data[i], 0.0), 1.0);
        out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    return out;
}

ImageBatch from_bytes(const std::vector<std::uint8_t>& bytes, Shape4 shape) {
    if (static_cast<std::int64_t>(bytes.size()) != shape.numel()) {
        throw std::invalid_argument("from_bytes: byte count does not match shape " + shape.str());
    }
    ImageBatch out{Tensor(shape)};
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        out.data.data[i] = static_cast<double>(bytes[i]) / 255.0;
    }
    return out;
}

RawImage image_to_raw(const ImageBatch& images, int index) {
    if (index < 0 || index >= images.batch()) {
        throw std::out_of_range("image_to_raw: batch index out of range");
    }
    RawImage raw;
    raw.h = images.height();
    raw.w = images.width();
    raw.channels = images.channels();
    raw.pixels.resize(static_cast<std::size_t>(raw.h) * raw.w * raw.channels);
    for (int y = 0; y < raw.h; ++y) {
        for (int x = 0; x < raw.w; ++x) {
            for (int c = 0; c < raw.channels; ++c) {
                const double v = std::min(std::max(images.data.at(index, c, y, x), 0.0), 1.0);
                raw.pixels[(static_cast<std::size_t>(y) * raw.w + x) * raw.channels + c] =
                    static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
        }
    }
    return raw;
}

ImageBatch raw_to_image(const RawImage& raw) {
    ImageBatch out{Tensor({1, raw.channels, raw.h, raw.w})};
    for (int y = 0; y < raw.h; ++y) {
        for (int x = 0; x < raw.w; ++x) {
            for (int c = 0; c < raw.channels; ++c) {
                out.data.at(0, c, y, x) = static_cast<double>(raw.at(y, x, c)) / 255.0;
            }
        }
    }
    return out;
}

RawImage mask_to_raw(const SegmentationMask& mask, int index) {
    if (index < 0 || index >= mask.n) {
        throw std::out_of_range("mask_to_raw: batch index out of range");
    }
    RawImage raw;
    raw.h = mask.h;
    raw.w = mask.w;
    raw.channels = 1;
    raw.pixels.resize(static_cast<std::size_t>(mask.h) * mask.w);
    for (int y = 0; y < mask.h; ++y) {
        for (int x = 0; x < mask.w; ++x) {
            const std::int32_t v = mask.at(index, y, x);
            if (v < 0 || v > 255) {
                throw std::invalid_argument("mask_to_raw: label " + std::to_string(v) +
                                            " does not fit in 8 bits");
            }
            raw.pixels[static_cast<std::size_t>(y) * mask.w + x] = static_cast<std::uint8_t>(v);
        }
    }
    return raw;
}

SegmentationMask raw_to_mask(const RawImage& raw, int num_classes, int ignore_index) {
    if (raw.channels != 1) {
        throw std::invalid_argument("raw_to_mask: masks must be single-channel");
    }
    SegmentationMask mask(1, raw.h, raw.w, num_classes, ignore_index);
    for (int y = 0; y < raw.h; ++y) {
        for (int x = 0; x < raw.w; ++x) {
            mask.at(0, y, x) = raw.at(y, x, 0);
        }
    }
    return mask;
}

}  // namespace dapas
