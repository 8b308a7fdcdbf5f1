#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "fgin/cube.hpp"
#include "fgin/ops.hpp"

namespace fgin {

enum class PatchRole { kTrain, kValidation, kTest };
enum class TestAnchor { kTopLeft, kBottomCenter };

struct Patch {
    Tensor<float> hr;  // [p, p, C]
    Tensor<float> lr;  // [p/s, p/s, C], exactly area_downsample(hr, s)
    int row = 0, col = 0;  // source rectangle origin in the cube
    PatchRole role = PatchRole::kTrain;
};

struct PatchSet {
    std::vector<Patch> patches;
    int scale = 2;
    int patch_size = 144;

    std::vector<const Patch*> with_role(PatchRole r) const {
        std::vector<const Patch*> out;
        for (const auto& p : patches)
            if (p.role == r) out.push_back(&p);
        return out;
    }
};

namespace detail {

inline Tensor<float> crop(const Tensor<float>& img, int r0, int c0, int size) {
    const int W = img.dim(1), C = img.dim(2);
    Tensor<float> out({size, size, C});
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j)
            for (int c = 0; c < C; ++c)
                out.data[(static_cast<size_t>(i) * size + j) * C + c] =
                    img.data[(static_cast<size_t>(r0 + i) * W + (c0 + j)) * C + c];
    return out;
}

inline Tensor<float> with_batch(const Tensor<float>& hwc) {
    Tensor<float> out;
    out.shape = {1, hwc.dim(0), hwc.dim(1), hwc.dim(2)};
    out.data = hwc.data;
    return out;
}

inline Tensor<float> drop_batch(const Tensor<float>& bhwc) {
    Tensor<float> out;
    out.shape = {bhwc.dim(1), bhwc.dim(2), bhwc.dim(3)};
    out.data = bhwc.data;
    return out;
}

}  // namespace detail

// LR generation: block-mean decimation (the degradation protocol operator).
inline Tensor<float> degrade(const Tensor<float>& hr, int scale) {
    return detail::drop_batch(area_downsample_forward(detail::with_batch(hr), scale));
}

// Patch protocol: one test patch anchored top-left or bottom-center, training
// tiles on a non-overlapping stride-`patch` grid over the remaining area
// (partial tiles dropped, tiles touching the test rectangle excluded), with a
// deterministic validation holdout.
inline PatchSet extract_patches(const Cube& cube, int scale, TestAnchor anchor,
                                int patch = 144, double val_fraction = 0.1,
                                uint64_t seed = 7) {
    const int H = cube.height(), W = cube.width();
    if (H < patch || W < patch)
        throw data_error("extract_patches: cube " + std::to_string(H) + "x" + std::to_string(W) +
                         " smaller than patch size " + std::to_string(patch));
    if (scale != 2 && scale != 4 && scale != 8)
        throw data_error("extract_patches: scale must be 2, 4 or 8");
    if (patch % scale != 0)
        throw data_error("extract_patches: patch size not divisible by scale");

    PatchSet set;
    set.scale = scale;
    set.patch_size = patch;

    const int tr = anchor == TestAnchor::kTopLeft ? 0 : H - patch;
    const int tc = anchor == TestAnchor::kTopLeft ? 0 : (W - patch) / 2;

    auto emit = [&](int r, int c, PatchRole role) {
        Patch p;
        p.row = r;
        p.col = c;
        p.role = role;
        p.hr = detail::crop(cube.values, r, c, patch);
        p.lr = degrade(p.hr, scale);
        set.patches.push_back(std::move(p));
    };
    emit(tr, tc, PatchRole::kTest);

    auto intersects_test = [&](int r, int c) {
        return r < tr + patch && r + patch > tr && c < tc + patch && c + patch > tc;
    };
    std::vector<std::pair<int, int>> train_tiles;
    for (int r = 0; r + patch <= H; r += patch)
        for (int c = 0; c + patch <= W; c += patch)
            if (!intersects_test(r, c)) train_tiles.emplace_back(r, c);
    if (train_tiles.empty()) throw data_error("extract_patches: no training tiles available");

    // Seeded shuffle; the first floor(val_fraction * n) tiles become the
    // validation holdout.
    std::vector<size_t> order(train_tiles.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const size_t n_val = static_cast<size_t>(val_fraction * static_cast<double>(order.size()));
    for (size_t k = 0; k < order.size(); ++k) {
        const auto [r, c] = train_tiles[order[k]];
        emit(r, c, k < n_val ? PatchRole::kValidation : PatchRole::kTrain);
    }
    return set;
}

}  // namespace fgin
