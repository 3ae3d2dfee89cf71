#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dapas {

/// Per-stream seed derivation: stream i uses root_seed XOR i. Workers and
/// batches get independent streams from one root seed.
inline std::uint64_t derive_seed(std::uint64_t root_seed, std::uint64_t index) {
    return root_seed ^ index;
}

/// Deterministic random stream. The engine (mt19937_64) is fully specified
/// by the standard and the value transforms below are written out explicitly,
/// so identical seeds give bit-identical draws on any conforming platform
/// (up to libm differences in log/cos/sqrt).
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double next_uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1]; safe as a log() argument.
    double next_uniform01_open_low() {
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_uniform01();
    }

    /// Standard normal via Box-Muller. Consumes two engine draws per value;
    /// no caching, so the draw sequence is a pure function of the seed.
    double next_normal() {
        const double u1 = next_uniform01_open_low();
        const double u2 = next_uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

    double next_normal(double mean, double std) { return mean + std * next_normal(); }

    /// Uniform integer in [0, n).
    std::uint64_t next_index(std::uint64_t n) {
        // Modulo bias is negligible for desk-scale n against a 64-bit range.
        return engine_() % n;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace dapas
