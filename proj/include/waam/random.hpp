#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace waam {

using Rng = std::mt19937_64;

/// splitmix64 finaliser; derives independent stream seeds from (seed, stream).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) { return Rng{mix_seed(seed, stream)}; }

/// Zero-mean, unit-variance noise on a uniform grid with a Gaussian
/// autocorrelation of the given length. correlation_length <= 0 gives white
/// noise. Closed grids wrap so the field is periodic.
inline std::vector<double> correlated_noise(Rng& rng, std::size_t n, double pitch,
                                            double correlation_length, bool closed) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out(n, 0.0);
    if (n == 0) return out;
    const double sigma_samples = correlation_length > 0.0 ? correlation_length / pitch : 0.0;
    if (sigma_samples < 0.5) {
        for (auto& v : out) v = normal(rng);
        return out;
    }
    const auto half = static_cast<std::size_t>(std::ceil(3.0 * sigma_samples));
    std::vector<double> kernel(2 * half + 1);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < kernel.size(); ++j) {
        const double d = static_cast<double>(j) - static_cast<double>(half);
        kernel[j] = std::exp(-0.5 * d * d / (sigma_samples * sigma_samples));
        norm2 += kernel[j] * kernel[j];
    }
    const double scale = 1.0 / std::sqrt(norm2);
    for (auto& w : kernel) w *= scale;

    if (closed) {
        std::vector<double> white(n);
        for (auto& v : white) v = normal(rng);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < kernel.size(); ++j) {
                const auto idx = (i + n * (half / n + 1) + j - half) % n;
                acc += kernel[j] * white[idx];
            }
            out[i] = acc;
        }
    } else {
        std::vector<double> white(n + 2 * half);
        for (auto& v : white) v = normal(rng);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < kernel.size(); ++j) acc += kernel[j] * white[i + j];
            out[i] = acc;
        }
    }
    return out;
}

}  // namespace waam
