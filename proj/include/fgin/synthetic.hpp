#pragma once

#include <cmath>
#include <random>

#include "fgin/cube.hpp"

namespace fgin {

// Seeded synthetic hyperspectral cube: smooth low-frequency spatial fields
// plus higher-frequency textures whose amplitude varies smoothly across the
// spectral axis, so bands are strongly correlated and the texture statistics
// are learnable.
inline Cube synthetic_cube(int height, int width, int bands, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> unit(0.3, 1.0);

    struct Wave {
        double fx, fy, ph, amp;
    };
    std::vector<Wave> smooth, texture;
    for (int k = 0; k < 4; ++k)
        smooth.push_back({(k + 1) * 2.0 * M_PI / width, (4 - k) * 2.0 * M_PI / height,
                          phase(rng), unit(rng)});
    for (int k = 0; k < 5; ++k)
        texture.push_back({(8 + 3 * k) * 2.0 * M_PI / width, (10 + 2 * k) * 2.0 * M_PI / height,
                           phase(rng), unit(rng)});

    // Smooth per-band envelopes for base level and texture strength.
    std::vector<double> base(static_cast<size_t>(bands)), tex(static_cast<size_t>(bands));
    const double ph_b = phase(rng), ph_t = phase(rng);
    for (int b = 0; b < bands; ++b) {
        const double t = bands > 1 ? static_cast<double>(b) / (bands - 1) : 0.0;
        base[static_cast<size_t>(b)] = 0.6 + 0.4 * std::sin(2.0 * M_PI * t + ph_b);
        tex[static_cast<size_t>(b)] = 0.5 + 0.5 * std::sin(3.0 * M_PI * t + ph_t);
    }

    Tensor<float> raw({height, width, bands});
    for (int i = 0; i < height; ++i)
        for (int j = 0; j < width; ++j) {
            double s = 0.0, x = 0.0;
            for (const auto& w : smooth) s += w.amp * std::sin(w.fx * j + w.fy * i + w.ph);
            for (const auto& w : texture) x += w.amp * std::sin(w.fx * j + w.fy * i + w.ph);
            for (int b = 0; b < bands; ++b)
                raw.data[(static_cast<size_t>(i) * width + j) * bands + b] = static_cast<float>(
                    base[static_cast<size_t>(b)] * (2.0 + 0.5 * s) +
                    tex[static_cast<size_t>(b)] * 0.4 * x);
        }
    return normalize(raw);
}

}  // namespace fgin
