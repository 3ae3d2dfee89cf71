#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "dapas/core_types.hpp"
#include "dapas/image_io.hpp"

namespace dapas {

struct Sample {
    ImageBatch image;  // single image (batch 1)
    SegmentationMask mask;
};

/// A labeled dataset. Implementations are deterministic: get(i) always
/// returns the same pair, so concurrent readers are safe.
class DatasetHandle {
public:
    virtual ~DatasetHandle() = default;

    virtual std::size_t size() const = 0;
    virtual Sample get(std::size_t index) const = 0;

    virtual std::string source() const = 0;
    virtual std::pair<int, int> resolution() const = 0;
    virtual int num_classes() const = 0;
    virtual int ignore_index() const = 0;

    /// Stacks the given indices into one batch.
    Sample load_batch(const std::vector<std::size_t>& indices) const;
};

/// Deterministic synthetic segmentation data: 1-4 colored shapes
/// (axis-aligned rectangles, circles, triangles) on a smoothly shaded gray
/// background (planar gradient plus a low-frequency sinusoid). Image and
/// mask come from the same rasterisation pass, so correspondence is
/// pixel-exact. Shape palettes are saturated hue-wheel colors while the
/// background carries zero channel spread, which keeps shape pixels
/// separable from the background palette.
std::shared_ptr<DatasetHandle> synth_shapes(int count, std::pair<int, int> resolution,
                                            int num_classes, std::uint64_t seed);

/// Channel spread (max - min over channels) above which a pixel color is
/// outside the background palette. Background jitter stays below 0.08;
/// shape colors stay above 0.25.
constexpr double kSynthShapeSpreadThreshold = 0.15;

enum class Split { Train, Val };

/// Loads a VOC-layout directory: root/images/*.png|jpg, root/masks/*.png,
/// root/splits/{train,val}.txt with one stem per line. Images are
/// bilinearly resized then rescaled to [0,1]; masks are nearest-neighbor
/// resized (labels never interpolated).
std::shared_ptr<DatasetHandle> load_voc_dir(const std::filesystem::path& root, Split split,
                                            std::pair<int, int> resolution,
                                            int num_classes = 21,
                                            int ignore_index = kDefaultIgnoreIndex);

/// 8-bit quantization: round(x * 255), NCHW order.
std::vector<std::uint8_t> to_bytes(const ImageBatch& images);

/// Inverse of to_bytes: divides by 255.
ImageBatch from_bytes(const std::vector<std::uint8_t>& bytes, Shape4 shape);

/// Worst-case |decode(encode(x)) - x| for in-range intensities.
constexpr double kQuantizationBound = 1.0 / 510.0;

/// One image of the batch as an 8-bit raw image (HWC), via to_bytes rounding.
RawImage image_to_raw(const ImageBatch& images, int index);

/// 8-bit raw image to a single-image batch, dividing by 255.
ImageBatch raw_to_image(const RawImage& raw);

/// Mask plane <-> 8-bit gray raw image (labels stored as byte values).
RawImage mask_to_raw(const SegmentationMask& mask, int index);
SegmentationMask raw_to_mask(const RawImage& raw, int num_classes, int ignore_index);

}  // namespace dapas
