#include "dapas/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

#include <jpeglib.h>
#include <png.h>

namespace dapas {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) {
        throw std::runtime_error("cannot open '" + path.string() + "'");
    }
    return f;
}

[[noreturn]] void jpeg_error_exit(j_common_ptr cinfo) {
    char msg[JMSG_LENGTH_MAX];
    (*cinfo->err->format_message)(cinfo, msg);
    throw std::runtime_error(std::string("jpeg: ") + msg);
}

}  // namespace

RawImage read_png(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("failed to decode PNG '" + path.string() + "'");
    }
    png_init_io(png, f.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("'" + path.string() + "': 16-bit PNG not supported (8-bit required)");
    }
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("'" + path.string() + "': unsupported channel count " +
                                 std::to_string(channels));
    }

    RawImage img;
    img.h = static_cast<int>(h);
    img.w = static_cast<int>(w);
    img.channels = channels;
    img.pixels.resize(static_cast<std::size_t>(h) * w * channels);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) {
        rows[y] = img.pixels.data() + static_cast<std::size_t>(y) * w * channels;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

RawImage read_jpeg(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    jpeg_decompress_struct cinfo{};
    jpeg_error_mgr jerr{};
    cinfo.err = jpeg_std_error(&jerr);
    jerr.error_exit = jpeg_error_exit;
    jpeg_create_decompress(&cinfo);
    try {
        jpeg_stdio_src(&cinfo, f.get());
        jpeg_read_header(&cinfo, TRUE);
        jpeg_start_decompress(&cinfo);
        const int w = static_cast<int>(cinfo.output_width);
        const int h = static_cast<int>(cinfo.output_height);
        const int channels = cinfo.output_components;
        if (channels != 1 && channels != 3) {
            throw std::runtime_error("'" + path.string() + "': unsupported JPEG component count");
        }
        RawImage img;
        img.h = h;
        img.w = w;
        img.channels = channels;
        img.pixels.resize(static_cast<std::size_t>(h) * w * channels);
        while (cinfo.output_scanline < cinfo.output_height) {
            JSAMPROW row = img.pixels.data() +
                           static_cast<std::size_t>(cinfo.output_scanline) * w * channels;
            jpeg_read_scanlines(&cinfo, &row, 1);
        }
        jpeg_finish_decompress(&cinfo);
        jpeg_destroy_decompress(&cinfo);
        return img;
    } catch (...) {
        jpeg_destroy_decompress(&cinfo);
        throw;
    }
}

RawImage read_image(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png") return read_png(path);
    if (ext == ".jpg" || ext == ".jpeg") return read_jpeg(path);
    throw std::runtime_error("'" + path.string() + "': unsupported image extension");
}

void write_png(const std::filesystem::path& path, const RawImage& image) {
    if (image.channels != 1 && image.channels != 3) {
        throw std::invalid_argument("write_png: images must have 1 or 3 channels");
    }
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed to encode PNG '" + path.string() + "'");
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, image.w, image.h, 8,
                 image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(image.h);
    for (int y = 0; y < image.h; ++y) {
        rows[y] = const_cast<png_bytep>(image.pixels.data() +
                                        static_cast<std::size_t>(y) * image.w * image.channels);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

RawImage resize_bilinear(const RawImage& src, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) {
        throw std::invalid_argument("resize_bilinear: target resolution must be positive");
    }
    if (src.h == out_h && src.w == out_w) return src;
    RawImage dst;
    dst.h = out_h;
    dst.w = out_w;
    dst.channels = src.channels;
    dst.pixels.resize(static_cast<std::size_t>(out_h) * out_w * src.channels);
    const double sy = static_cast<double>(src.h) / out_h;
    const double sx = static_cast<double>(src.w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        // Pixel-center alignment.
        const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
        const int y0 = std::min(static_cast<int>(fy), src.h - 1);
        const int y1 = std::min(y0 + 1, src.h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
            const int x0 = std::min(static_cast<int>(fx), src.w - 1);
            const int x1 = std::min(x0 + 1, src.w - 1);
            const double wx = fx - x0;
            for (int c = 0; c < src.channels; ++c) {
                const double top = (1.0 - wx) * src.at(y0, x0, c) + wx * src.at(y0, x1, c);
                const double bot = (1.0 - wx) * src.at(y1, x0, c) + wx * src.at(y1, x1, c);
                const double v = (1.0 - wy) * top + wy * bot;
                dst.pixels[(static_cast<std::size_t>(y) * out_w + x) * src.channels + c] =
                    static_cast<std::uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
            }
        }
    }
    return dst;
}

SegmentationMask resize_nearest(const SegmentationMask& src, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) {
        throw std::invalid_argument("resize_nearest: target resolution must be positive");
    }
    if (src.h == out_h && src.w == out_w) return src;
    SegmentationMask dst(src.n, out_h, out_w, src.num_classes, src.ignore_index);
    const double sy = static_cast<double>(src.h) / out_h;
    const double sx = static_cast<double>(src.w) / out_w;
    for (int n = 0; n < src.n; ++n) {
        for (int y = 0; y < out_h; ++y) {
            const int iy = std::min(static_cast<int>((y + 0.5) * sy), src.h - 1);
            for (int x = 0; x < out_w; ++x) {
                const int ix = std::min(static_cast<int>((x + 0.5) * sx), src.w - 1);
                dst.at(n, y, x) = src.at(n, iy, ix);
            }
        }
    }
    return dst;
}

}  // namespace dapas
