#ifndef CVQKD_RNG_HPP
#define CVQKD_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace cvqkd {

/// Seeded random stream with a self-contained Gaussian sampler.
///
/// The normal variates are produced by Box-Muller over mt19937_64 rather
/// than std::normal_distribution, whose output is implementation defined.
/// A given (seed, call sequence) therefore yields the same values on every
/// standard library.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

    /// Independent substream derived from (seed, stream_id).
    static RandomStream substream(std::uint64_t seed, std::uint64_t stream_id) {
        return RandomStream(mix(seed, stream_id));
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection to avoid modulo bias.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    /// Standard normal N(0, 1).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// N(0, variance).
    double gaussian(double variance) {
        return variance > 0.0 ? gaussian() * std::sqrt(variance) : 0.0;
    }

private:
    // splitmix64 finalizer; decorrelates nearby (seed, id) pairs.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t id) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (id + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace cvqkd

#endif // CVQKD_RNG_HPP
