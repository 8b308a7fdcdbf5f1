#pragma once

#include <vector>

#include "fgin/cube.hpp"
#include "fgin/train.hpp"

namespace fgin {

// Full-cube super-resolution: slides fixed-size input tiles over the LR cube
// (last tile shifted back to stay in range) and averages predictions where
// tiles overlap.
inline Tensor<float> super_resolve(FginModel<float>& model, const Tensor<float>& lr,
                                   int tile = 0) {
    if (lr.rank() != 3) throw shape_error("super_resolve: expected [H,W,C] cube");
    const int H = lr.dim(0), W = lr.dim(1), C = lr.dim(2);
    const int s = model.cfg.scale;
    if (tile <= 0) tile = std::min({144 / s, H, W});
    if (tile > H || tile > W)
        throw data_error("super_resolve: tile size exceeds input dims");

    auto starts = [&](int extent) {
        std::vector<int> v;
        for (int r = 0;; r += tile) {
            if (r + tile >= extent) {
                v.push_back(extent - tile);
                break;
            }
            v.push_back(r);
        }
        return v;
    };

    Tensor<float> sum({H * s, W * s, C});
    Tensor<float> count({H * s, W * s, 1});
    for (int r : starts(H))
        for (int c : starts(W)) {
            Tensor<float> in({tile, tile, C});
            for (int i = 0; i < tile; ++i)
                for (int j = 0; j < tile; ++j)
                    std::copy(&lr.data[(static_cast<size_t>(r + i) * W + (c + j)) * C],
                              &lr.data[(static_cast<size_t>(r + i) * W + (c + j)) * C + C],
                              &in.data[(static_cast<size_t>(i) * tile + j) * C]);
            Tensor<float> out = predict_patch(model, in);
            const int R = r * s, Cc = c * s, ts = tile * s;
            for (int i = 0; i < ts; ++i)
                for (int j = 0; j < ts; ++j) {
                    float* dst = &sum.data[(static_cast<size_t>(R + i) * (W * s) + (Cc + j)) * C];
                    const float* src = &out.data[(static_cast<size_t>(i) * ts + j) * C];
                    for (int ch = 0; ch < C; ++ch) dst[ch] += src[ch];
                    count.data[static_cast<size_t>(R + i) * (W * s) + (Cc + j)] += 1.0f;
                }
        }
    for (int i = 0; i < H * s; ++i)
        for (int j = 0; j < W * s; ++j) {
            const float k = count.data[static_cast<size_t>(i) * (W * s) + j];
            float* dst = &sum.data[(static_cast<size_t>(i) * (W * s) + j) * C];
            for (int ch = 0; ch < C; ++ch) dst[ch] /= k;
        }
    return sum;
}

}  // namespace fgin
