#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dapas/core_types.hpp"

namespace dapas {

/// 8-bit image as stored on disk: HWC interleaved, 1 or 3 channels.
struct RawImage {
    int h = 0;
    int w = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * w + x) * channels + c];
    }
};

/// Reads an 8-bit PNG. Palette/low-depth images are expanded; 16-bit depth
/// is rejected. Returns 1 or 3 channels (alpha stripped).
RawImage read_png(const std::filesystem::path& path);

/// Reads an 8-bit JPEG as RGB (or grayscale).
RawImage read_jpeg(const std::filesystem::path& path);

/// Dispatches on extension: .png / .jpg / .jpeg.
RawImage read_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RawImage& image);

/// Bilinear resize of an 8-bit image.
RawImage resize_bilinear(const RawImage& src, int out_h, int out_w);

/// Nearest-neighbor resize of a label mask; never interpolates, so the
/// result only contains labels present in the source.
SegmentationMask resize_nearest(const SegmentationMask& src, int out_h, int out_w);

}  // namespace dapas
