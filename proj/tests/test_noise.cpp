#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "dapas/noise.hpp"
#include "dapas/rng.hpp"

using namespace dapas;

namespace {

double empirical_mean(const Tensor& t) {
    double acc = 0.0;
    for (double v : t.data) acc += v;
    return acc / static_cast<double>(t.data.size());
}

double empirical_std(const Tensor& t) {
    const double mean = empirical_mean(t);
    double acc = 0.0;
    for (double v : t.data) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(t.data.size()));
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) {
            ++i;
        } else {
            ++j;
        }
        const double fa = static_cast<double>(i) / a.size();
        const double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

}  // namespace

TEST_CASE("gaussian noise matches its declared moments over 1e5+ draws") {
    // 1x3x192x192 = 110592 draws
    const NoiseTensor noise =
        sample_noise(NoiseSpec::gaussian(0.0, 0.004), {1, 3, 192, 192}, 7);
    CHECK(std::abs(empirical_mean(noise.data)) < 0.0005);
    CHECK(std::abs(empirical_std(noise.data) - 0.004) < 0.0005);
}

TEST_CASE("degenerate-width gaussian concentrates at its mean") {
    const NoiseTensor noise = sample_noise(NoiseSpec::gaussian(0.0, 1e-9), {1, 3, 64, 64}, 3);
    for (double v : noise.data.data) CHECK(std::abs(v) <= 1e-6);
}

TEST_CASE("bimodal draws concentrate near the two centers") {
    const NoiseSpec spec = NoiseSpec::bimodal();
    const NoiseTensor noise = sample_noise(spec, {1, 3, 192, 192}, 7);
    CHECK(std::abs(empirical_mean(noise.data)) < 0.001);
    // Mixture tail bound: >= 95% of draws within 3 sigma of either center.
    std::int64_t near = 0;
    for (double v : noise.data.data) {
        if (std::abs(std::abs(v) - 0.024) <= 3.0 * 0.004) ++near;
    }
    const double frac = static_cast<double>(near) / static_cast<double>(noise.data.numel());
    CHECK(frac >= 0.95);
}

TEST_CASE("uniform noise stays inside its range") {
    const NoiseTensor noise = sample_noise(NoiseSpec::uniform(), {2, 3, 64, 64}, 11);
    for (double v : noise.data.data) {
        CHECK(v >= -0.035);
        CHECK(v < 0.035);
    }
}

TEST_CASE("sampling is bit-identical under equal (spec, shape, seed)") {
    for (const NoiseSpec& spec :
         {NoiseSpec::gaussian(), NoiseSpec::uniform(), NoiseSpec::bimodal()}) {
        const NoiseTensor a = sample_noise(spec, {2, 3, 32, 32}, 1234);
        const NoiseTensor b = sample_noise(spec, {2, 3, 32, 32}, 1234);
        CHECK(a.data.data == b.data.data);
        const NoiseTensor c = sample_noise(spec, {2, 3, 32, 32}, 1235);
        CHECK(a.data.data != c.data.data);
    }
}

TEST_CASE("bimodal with weights (1,0) is distributionally a single gaussian") {
    const NoiseTensor mix =
        sample_noise(NoiseSpec::bimodal(-0.024, 0.024, 0.004, 1.0, 0.0), {1, 1, 96, 96}, 21);
    const NoiseTensor ref = sample_noise(NoiseSpec::gaussian(-0.024, 0.004), {1, 1, 96, 96}, 42);
    const double d = ks_statistic(mix.data.data, ref.data.data);
    // alpha = 0.001 critical value: 1.95 * sqrt(2/n)
    const double critical = 1.95 * std::sqrt(2.0 / static_cast<double>(mix.data.numel()));
    CHECK(d < critical);
}

TEST_CASE("apply_noise adds and clamps") {
    ImageBatch images{Tensor::full({1, 3, 32, 32}, 0.5)};

    SUBCASE("zero noise is the identity") {
        NoiseTensor zero;
        zero.data = Tensor({1, 3, 32, 32});
        zero.spec = NoiseSpec::gaussian();
        const ImageBatch out = apply_noise(images, zero);
        CHECK(out.data.data == images.data.data);
    }

    SUBCASE("upper clamp holds at all-ones") {
        ImageBatch ones{Tensor::full({1, 3, 32, 32}, 1.0)};
        NoiseTensor pos;
        pos.data = Tensor::full({1, 3, 32, 32}, 0.25);
        const ImageBatch out = apply_noise(ones, pos);
        for (double v : out.data.data) CHECK(v == 1.0);
    }

    SUBCASE("0.5 + (-0.035) = 0.465") {
        NoiseTensor n;
        n.data = Tensor::full({1, 3, 32, 32}, -0.035);
        const ImageBatch out = apply_noise(images, n);
        CHECK(out.data.at(0, 0, 0, 0) == doctest::Approx(0.465).epsilon(1e-12));
    }

    SUBCASE("shape mismatch throws") {
        NoiseTensor n;
        n.data = Tensor({1, 3, 64, 64});
        CHECK_THROWS_AS(apply_noise(images, n), std::invalid_argument);
    }
}

TEST_CASE("apply_noise never moves a pixel further than the noise sup-norm") {
    RandomStream rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        ImageBatch images{Tensor({1, 3, 32, 32})};
        for (double& v : images.data.data) v = rng.next_uniform01();
        const NoiseSpec spec = trial % 2 == 0 ? NoiseSpec::uniform(-0.1, 0.1)
                                              : NoiseSpec::gaussian(0.0, 0.05);
        const NoiseTensor noise = sample_noise(spec, images.data.shape, 1000 + trial);
        const ImageBatch out = apply_noise(images, noise);
        CHECK(linf_diff(out.data, images.data) <= linf_norm(noise.data) + 1e-15);
        for (double v : out.data.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("invalid specs are rejected at sampling time") {
    NoiseSpec bad;
    bad.kind = NoiseKind::Uniform;
    bad.low = 0.5;
    bad.high = 0.5;
    CHECK_THROWS_AS(sample_noise(bad, {1, 1, 32, 32}, 0), std::invalid_argument);
}
