#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgin/tensor.hpp"

namespace fgin {

// Normalization record: one global min/max pair per cube so inter-band
// ratios (what SAM measures) survive the affine map.
struct NormRecord {
    double global_min = 0.0;
    double global_max = 1.0;
};

// Hyperspectral image: [H, W, C] float32 values in [0,1] plus the
// normalization record needed to map back to raw units.
struct Cube {
    Tensor<float> values;  // [H, W, C]
    NormRecord norm;

    int height() const { return values.dim(0); }
    int width() const { return values.dim(1); }
    int bands() const { return values.dim(2); }
};

inline Cube normalize(const Tensor<float>& raw) {
    if (raw.rank() != 3) throw shape_error("normalize: expected [H,W,C] tensor");
    raw.require_finite("normalize");
    float lo = raw.data[0], hi = raw.data[0];
    for (float v : raw.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) throw data_error("normalize: degenerate dynamic range (constant cube)");
    Cube c;
    c.norm.global_min = lo;
    c.norm.global_max = hi;
    c.values = Tensor<float>(raw.shape);
    const float inv = 1.0f / (hi - lo);
    for (int64_t i = 0; i < raw.numel(); ++i) c.values.data[i] = (raw.data[i] - lo) * inv;
    return c;
}

inline Tensor<float> denormalize(const Cube& c) {
    Tensor<float> out(c.values.shape);
    const float lo = static_cast<float>(c.norm.global_min);
    const float span = static_cast<float>(c.norm.global_max - c.norm.global_min);
    for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = c.values.data[i] * span + lo;
    return out;
}

// On-disk cube format: JSON sidecar header at <path>.json plus a raw
// little-endian float32 payload at <path>, band-sequential (one full H×W
// plane per band).
inline void write_cube(const Cube& c, const std::string& path) {
    nlohmann::json hdr{{"height", c.height()},
                       {"width", c.width()},
                       {"bands", c.bands()},
                       {"dtype", "f32"},
                       {"interleave", "band-sequential"},
                       {"norm", {{"global_min", c.norm.global_min},
                                 {"global_max", c.norm.global_max}}}};
    std::ofstream hf(path + ".json");
    if (!hf) throw data_error("write_cube: cannot open " + path + ".json");
    hf << hdr.dump(2) << '\n';

    const int H = c.height(), W = c.width(), C = c.bands();
    std::vector<float> bsq(static_cast<size_t>(c.values.numel()));
    for (int b = 0; b < C; ++b)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j)
                bsq[(static_cast<size_t>(b) * H + i) * W + j] =
                    c.values.data[(static_cast<size_t>(i) * W + j) * C + b];
    std::ofstream bf(path, std::ios::binary);
    if (!bf) throw data_error("write_cube: cannot open " + path);
    bf.write(reinterpret_cast<const char*>(bsq.data()),
             static_cast<std::streamsize>(bsq.size() * sizeof(float)));
}

inline Cube read_cube(const std::string& path) {
    std::ifstream hf(path + ".json");
    if (!hf) throw data_error("read_cube: missing header " + path + ".json");
    nlohmann::json hdr;
    try {
        hf >> hdr;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("read_cube: malformed header: ") + e.what());
    }
    for (const char* field : {"height", "width", "bands", "dtype", "interleave", "norm"})
        if (!hdr.contains(field))
            throw data_error(std::string("read_cube: header missing field '") + field + "'");
    if (hdr["dtype"] != "f32")
        throw data_error("read_cube: unknown dtype " + hdr["dtype"].dump());
    if (hdr["interleave"] != "band-sequential")
        throw data_error("read_cube: unknown interleave " + hdr["interleave"].dump());
    const int H = hdr["height"], W = hdr["width"], C = hdr["bands"];
    if (H <= 0 || W <= 0 || C <= 0) throw data_error("read_cube: non-positive dimension");

    std::ifstream bf(path, std::ios::binary | std::ios::ate);
    if (!bf) throw data_error("read_cube: missing payload " + path);
    const auto actual = static_cast<int64_t>(bf.tellg());
    const int64_t expected = static_cast<int64_t>(H) * W * C * 4;
    if (actual != expected)
        throw data_error("read_cube: payload length mismatch, expected " +
                         std::to_string(expected) + " bytes, got " + std::to_string(actual));
    bf.seekg(0);
    std::vector<float> bsq(static_cast<size_t>(H) * W * C);
    bf.read(reinterpret_cast<char*>(bsq.data()), expected);
    if (!bf) throw data_error("read_cube: short read on " + path);

    Cube c;
    c.norm.global_min = hdr["norm"]["global_min"];
    c.norm.global_max = hdr["norm"]["global_max"];
    c.values = Tensor<float>({H, W, C});
    for (int b = 0; b < C; ++b)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j)
                c.values.data[(static_cast<size_t>(i) * W + j) * C + b] =
                    bsq[(static_cast<size_t>(b) * H + i) * W + j];
    return c;
}

// Raw float ingestion; layouts: band-sequential (bsq) or
// band-interleaved-by-pixel (bip).
inline Tensor<float> read_raw_floats(const std::string& path, int H, int W, int C,
                                     const std::string& interleave) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw data_error("read_raw_floats: cannot open " + path);
    const auto actual = static_cast<int64_t>(f.tellg());
    const int64_t expected = static_cast<int64_t>(H) * W * C * 4;
    if (actual != expected)
        throw data_error("read_raw_floats: file length " + std::to_string(actual) +
                         " does not match layout " + std::to_string(H) + "," +
                         std::to_string(W) + "," + std::to_string(C) + " (" +
                         std::to_string(expected) + " bytes)");
    f.seekg(0);
    std::vector<float> buf(static_cast<size_t>(H) * W * C);
    f.read(reinterpret_cast<char*>(buf.data()), expected);

    Tensor<float> t({H, W, C});
    if (interleave == "bip") {
        t.data = std::move(buf);
    } else if (interleave == "bsq") {
        for (int b = 0; b < C; ++b)
            for (int i = 0; i < H; ++i)
                for (int j = 0; j < W; ++j)
                    t.data[(static_cast<size_t>(i) * W + j) * C + b] =
                        buf[(static_cast<size_t>(b) * H + i) * W + j];
    } else {
        throw data_error("read_raw_floats: unknown interleave '" + interleave +
                         "' (expected bsq or bip)");
    }
    return t;
}

}  // namespace fgin
