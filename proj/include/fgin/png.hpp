#pragma once

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "fgin/cube.hpp"

namespace fgin {

namespace detail {

inline void png_chunk(std::vector<uint8_t>& out, const char type[4],
                      const std::vector<uint8_t>& payload) {
    auto push_u32 = [&out](uint32_t v) {
        out.push_back(static_cast<uint8_t>(v >> 24));
        out.push_back(static_cast<uint8_t>(v >> 16));
        out.push_back(static_cast<uint8_t>(v >> 8));
        out.push_back(static_cast<uint8_t>(v));
    };
    push_u32(static_cast<uint32_t>(payload.size()));
    const size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const uint32_t crc = static_cast<uint32_t>(
        crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
    push_u32(crc);
}

}  // namespace detail

// Minimal 8-bit PNG writer (grayscale or RGB) backed by zlib.
inline void write_png8(const std::string& path, const std::vector<uint8_t>& pixels, int width,
                       int height, int channels) {
    if (channels != 1 && channels != 3) throw data_error("write_png8: channels must be 1 or 3");
    if (pixels.size() != static_cast<size_t>(width) * height * channels)
        throw data_error("write_png8: pixel buffer size mismatch");

    // Filter byte 0 per scanline.
    std::vector<uint8_t> raw;
    raw.reserve(static_cast<size_t>(height) * (1 + static_cast<size_t>(width) * channels));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);
        const uint8_t* row = pixels.data() + static_cast<size_t>(y) * width * channels;
        raw.insert(raw.end(), row, row + static_cast<size_t>(width) * channels);
    }
    uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> comp(comp_len);
    if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw data_error("write_png8: deflate failed");
    comp.resize(comp_len);

    std::vector<uint8_t> out{0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    std::vector<uint8_t> ihdr(13);
    auto put_u32 = [](uint8_t* p, uint32_t v) {
        p[0] = static_cast<uint8_t>(v >> 24);
        p[1] = static_cast<uint8_t>(v >> 16);
        p[2] = static_cast<uint8_t>(v >> 8);
        p[3] = static_cast<uint8_t>(v);
    };
    put_u32(&ihdr[0], static_cast<uint32_t>(width));
    put_u32(&ihdr[4], static_cast<uint32_t>(height));
    ihdr[8] = 8;                                  // bit depth
    ihdr[9] = channels == 1 ? 0 : 2;              // grayscale / truecolor
    ihdr[10] = ihdr[11] = ihdr[12] = 0;
    detail::png_chunk(out, "IHDR", ihdr);
    detail::png_chunk(out, "IDAT", comp);
    detail::png_chunk(out, "IEND", {});

    std::ofstream f(path, std::ios::binary);
    if (!f) throw data_error("write_png8: cannot open " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

// Linear [0,1] -> [0,255] with round-half-up.
inline uint8_t quantize8(float v) {
    const float q = std::floor(v * 255.0f + 0.5f);
    return static_cast<uint8_t>(std::clamp(q, 0.0f, 255.0f));
}

// Exports one band as grayscale, or three bands as a false-color RGB image.
inline void export_band_png(const Cube& cube, const std::vector<int>& bands,
                            const std::string& path) {
    if (bands.size() != 1 && bands.size() != 3)
        throw data_error("export_band_png: need 1 band (gray) or 3 bands (rgb)");
    for (int b : bands)
        if (b < 0 || b >= cube.bands())
            throw data_error("export_band_png: band " + std::to_string(b) +
                             " out of range [0," + std::to_string(cube.bands()) + ")");
    const int H = cube.height(), W = cube.width(), C = cube.bands();
    const int ch = static_cast<int>(bands.size());
    std::vector<uint8_t> px(static_cast<size_t>(H) * W * ch);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            for (int k = 0; k < ch; ++k)
                px[(static_cast<size_t>(i) * W + j) * ch + k] =
                    quantize8(cube.values.data[(static_cast<size_t>(i) * W + j) * C + bands[k]]);
    write_png8(path, px, W, H, ch);
}

}  // namespace fgin
