#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>

#include "dapas/data.hpp"
#include "dapas/rng.hpp"

using namespace dapas;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dapas_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

double channel_spread(const ImageBatch& img, int y, int x) {
    double lo = 1.0, hi = 0.0;
    for (int c = 0; c < img.channels(); ++c) {
        lo = std::min(lo, img.data.at(0, c, y, x));
        hi = std::max(hi, img.data.at(0, c, y, x));
    }
    return hi - lo;
}

}  // namespace

TEST_CASE("synthetic dataset is bit-identical under the same seed") {
    const auto a = synth_shapes(10, {64, 64}, 4, 3);
    const auto b = synth_shapes(10, {64, 64}, 4, 3);
    for (std::size_t i : {std::size_t{0}, std::size_t{4}, std::size_t{9}}) {
        const Sample sa = a->get(i);
        const Sample sb = b->get(i);
        CHECK(sa.image.data.data == sb.image.data.data);
        CHECK(sa.mask.labels == sb.mask.labels);
    }
    const auto c = synth_shapes(10, {64, 64}, 4, 4);
    CHECK(a->get(0).image.data.data != c->get(0).image.data.data);
}

TEST_CASE("two-class synthetic masks only use labels 0 and 1") {
    const auto ds = synth_shapes(6, {64, 64}, 2, 9);
    for (std::size_t i = 0; i < ds->size(); ++i) {
        const Sample s = ds->get(i);
        for (std::int32_t v : s.mask.labels) {
            CHECK(v >= 0);
            CHECK(v <= 1);
        }
    }
}

TEST_CASE("labeled pixels are exactly those outside the background palette") {
    const auto ds = synth_shapes(8, {64, 64}, 4, 17);
    for (std::size_t i = 0; i < ds->size(); ++i) {
        const Sample s = ds->get(i);
        validate_batch(s.image);
        validate_mask(s.mask);
        for (int y = 0; y < 64; ++y) {
            for (int x = 0; x < 64; ++x) {
                const double spread = channel_spread(s.image, y, x);
                const bool labeled = s.mask.at(0, y, x) > 0;
                CHECK(labeled == (spread > kSynthShapeSpreadThreshold));
            }
        }
    }
}

TEST_CASE("every shape class appears in at least 5% of 500 images") {
    const auto ds = synth_shapes(500, {32, 32}, 4, 5);
    std::vector<int> images_with_class(4, 0);
    for (std::size_t i = 0; i < ds->size(); ++i) {
        const Sample s = ds->get(i);
        std::set<std::int32_t> present(s.mask.labels.begin(), s.mask.labels.end());
        for (std::int32_t c : present) ++images_with_class[c];
    }
    for (int c = 1; c < 4; ++c) {
        CHECK(images_with_class[c] >= 25);
    }
}

TEST_CASE("quantization boundary: endpoints, midpoint, idempotence, bound") {
    ImageBatch img{Tensor({1, 1, 32, 32})};
    RandomStream rng(77);
    for (double& v : img.data.data) v = rng.next_uniform01();
    img.data.data[0] = 1.0;
    img.data.data[1] = 0.5;
    img.data.data[2] = 0.0;

    const auto bytes = to_bytes(img);
    CHECK(bytes[0] == 255);
    CHECK(bytes[1] == 128);  // round(0.5 * 255) = round(127.5) = 128
    CHECK(bytes[2] == 0);

    const ImageBatch decoded = from_bytes(bytes, img.data.shape);
    CHECK(decoded.data.data[0] == 1.0);
    CHECK(decoded.data.data[1] == doctest::Approx(128.0 / 255.0).epsilon(1e-15));
    CHECK(linf_diff(decoded.data, img.data) <= kQuantizationBound);

    // encode(decode(encode(x))) == encode(x): quantization is a fixed point.
    CHECK(to_bytes(decoded) == bytes);
}

TEST_CASE("png round trip of an image batch is exact after quantization") {
    const auto dir = temp_dir("png");
    const auto ds = synth_shapes(1, {64, 64}, 4, 21);
    const Sample s = ds->get(0);
    write_png(dir / "img.png", image_to_raw(s.image, 0));
    const ImageBatch reloaded = raw_to_image(read_png(dir / "img.png"));
    CHECK(reloaded.data.shape == s.image.data.shape);
    CHECK(linf_diff(reloaded.data, s.image.data) <= 1.0 / 255.0);
    // The file itself round-trips losslessly.
    const ImageBatch quantized = from_bytes(to_bytes(s.image), s.image.data.shape);
    CHECK(reloaded.data.data == quantized.data.data);
}

TEST_CASE("nearest-neighbor mask resize never invents labels") {
    RandomStream rng(93);
    for (int trial = 0; trial < 10; ++trial) {
        SegmentationMask mask(1, 40, 40, 5);
        for (auto& v : mask.labels) {
            v = rng.next_uniform01() < 0.1 ? mask.ignore_index
                                           : static_cast<std::int32_t>(rng.next_index(5));
        }
        const std::set<std::int32_t> source_labels(mask.labels.begin(), mask.labels.end());
        for (const auto& [h, w] : {std::pair{64, 64}, std::pair{17, 23}, std::pair{96, 32}}) {
            const SegmentationMask resized = resize_nearest(mask, h, w);
            for (std::int32_t v : resized.labels) {
                CHECK(source_labels.contains(v));
            }
        }
    }
}

TEST_CASE("voc directory loading") {
    const auto dir = temp_dir("voc");
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "masks");
    fs::create_directories(dir / "splits");

    const auto ds_src = synth_shapes(3, {64, 64}, 4, 33);
    std::ofstream split(dir / "splits" / "train.txt");
    for (int i = 0; i < 3; ++i) {
        const std::string stem = "img" + std::to_string(i);
        const Sample s = ds_src->get(i);
        write_png(dir / "images" / (stem + ".png"), image_to_raw(s.image, 0));
        write_png(dir / "masks" / (stem + ".png"), mask_to_raw(s.mask, 0));
        split << stem << "\n";
    }
    split.close();

    SUBCASE("three valid pairs load with matching content") {
        const auto ds = load_voc_dir(dir, Split::Train, {64, 64}, 4);
        CHECK(ds->size() == 3);
        const Sample s = ds->get(1);
        const Sample expected = ds_src->get(1);
        CHECK(s.mask.labels == expected.mask.labels);
        CHECK(linf_diff(s.image.data, expected.image.data) <= 1.0 / 255.0);
    }

    SUBCASE("resize path produces the requested resolution") {
        const auto ds = load_voc_dir(dir, Split::Train, {32, 96}, 4);
        const Sample s = ds->get(0);
        CHECK(s.image.height() == 32);
        CHECK(s.image.width() == 96);
        CHECK(s.mask.h == 32);
        CHECK(s.mask.w == 96);
        validate_mask(s.mask);
    }

    SUBCASE("mask with out-of-range value is rejected") {
        RawImage bad;
        bad.h = bad.w = 64;
        bad.channels = 1;
        bad.pixels.assign(64 * 64, 200);  // 200 outside [0,21) and != 255
        write_png(dir / "masks" / "img1.png", bad);
        const auto ds = load_voc_dir(dir, Split::Train, {64, 64}, 21);
        CHECK_THROWS_WITH_AS(ds->get(1), doctest::Contains("label"), std::invalid_argument);
    }

    SUBCASE("missing mask is an error") {
        fs::remove(dir / "masks" / "img2.png");
        CHECK_THROWS_WITH_AS(load_voc_dir(dir, Split::Train, {64, 64}, 4),
                             doctest::Contains("missing mask"), std::runtime_error);
    }

    SUBCASE("missing split list is an error") {
        CHECK_THROWS_AS(load_voc_dir(dir, Split::Val, {64, 64}, 4), std::runtime_error);
    }
}

TEST_CASE("load_batch stacks samples in index order") {
    const auto ds = synth_shapes(5, {32, 32}, 4, 3);
    const Sample batch = ds->load_batch({3, 0});
    CHECK(batch.image.batch() == 2);
    const Sample s3 = ds->get(3);
    for (int c = 0; c < 3; ++c) {
        CHECK(batch.image.data.at(0, c, 10, 10) == s3.image.data.at(0, c, 10, 10));
    }
    CHECK(batch.mask.at(0, 10, 10) == s3.mask.at(0, 10, 10));
}
