#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fgin/tensor.hpp"

namespace fgin {

// Forward/adjoint kernel pairs for every primitive the FGIN graph needs.
// All feature maps are [B,H,W,C]; convolutions are stride-1 with same
// zero-padding. Each adjoint takes the upstream gradient of the output and
// produces gradients for every input and parameter.

template <typename T>
struct ConvKernel {
    Tensor<T> weights;  // [kh, kw, c_in, c_out]
    Tensor<T> bias;     // [c_out]
};

template <typename T>
struct DepthwiseKernel {
    Tensor<T> weights;  // [kh, kw, c]
    Tensor<T> bias;     // [c]
};

namespace detail {

inline void check_kernel_size(int kh, int kw) {
    auto ok = [](int k) { return k == 1 || k == 3 || k == 5; };
    if (!ok(kh) || !ok(kw))
        throw shape_error("kernel size must be 1, 3 or 5, got " + std::to_string(kh) + "x" +
                          std::to_string(kw));
}

inline void check_map4(const std::vector<int>& s, const char* who) {
    if (s.size() != 4)
        throw shape_error(std::string(who) + ": expected rank-4 [B,H,W,C] input, got " +
                          shape_str(s));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv2d

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    detail::check_map4(x.shape, "conv2d");
    if (w.rank() != 4) throw shape_error("conv2d: weights must be [kh,kw,cin,cout]");
    const int B = x.dim(0), H = x.dim(1), W = x.dim(2), Ci = x.dim(3);
    const int kh = w.dim(0), kw = w.dim(1), Co = w.dim(3);
    detail::check_kernel_size(kh, kw);
    if (w.dim(2) != Ci)
        throw shape_error("conv2d: channel axis mismatch, input has " + std::to_string(Ci) +
                          " channels but weights expect " + std::to_string(w.dim(2)));
    if (b.rank() != 1 || b.dim(0) != Co)
        throw shape_error("conv2d: bias axis must have length " + std::to_string(Co));

    const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
    Tensor<T> y({B, H, W, Co});
    std::vector<T> acc(static_cast<size_t>(Co));
    for (int bb = 0; bb < B; ++bb)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                for (int co = 0; co < Co; ++co) acc[co] = b.data[co];
                for (int u = 0; u < kh; ++u) {
                    const int ii = i + u - ph;
                    if (ii < 0 || ii >= H) continue;
                    for (int v = 0; v < kw; ++v) {
                        const int jj = j + v - pw;
                        if (jj < 0 || jj >= W) continue;
                        const T* xp = &x.data[x.idx4(bb, ii, jj, 0)];
                        const T* wp = &w.data[static_cast<size_t>(((u * kw) + v)) *
                                              static_cast<size_t>(Ci) * Co];
                        for (int ci = 0; ci < Ci; ++ci) {
                            const T xv = xp[ci];
                            const T* wc = wp + static_cast<size_t>(ci) * Co;
                            for (int co = 0; co < Co; ++co) acc[co] += xv * wc[co];
                        }
                    }
                }
                T* yp = &y.data[y.idx4(bb, i, j, 0)];
                for (int co = 0; co < Co; ++co) yp[co] = acc[co];
            }
    return y;
}

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy, Tensor<T>& gx,
                     Tensor<T>& gw, Tensor<T>& gb) {
    const int B = x.dim(0), H = x.dim(1), W = x.dim(2), Ci = x.dim(3);
    const int kh = w.dim(0), kw = w.dim(1), Co = w.dim(3);
    const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
    gx = Tensor<T>(x.shape);
    gw = Tensor<T>(w.shape);
    gb = Tensor<T>({Co});
    for (int bb = 0; bb < B; ++bb)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                const T* gyp = &gy.data[gy.idx4(bb, i, j, 0)];
                for (int co = 0; co < Co; ++co) gb.data[co] += gyp[co];
                for (int u = 0; u < kh; ++u) {
                    const int ii = i + u - ph;
                    if (ii < 0 || ii >= H) continue;
                    for (int v = 0; v < kw; ++v) {
                        const int jj = j + v - pw;
                        if (jj < 0 || jj >= W) continue;
                        const T* xp = &x.data[x.idx4(bb, ii, jj, 0)];
                        T* gxp = &gx.data[gx.idx4(bb, ii, jj, 0)];
                        const size_t wbase =
                            static_cast<size_t>((u * kw) + v) * static_cast<size_t>(Ci) * Co;
                        for (int ci = 0; ci < Ci; ++ci) {
                            const T xv = xp[ci];
                            const T* wc = &w.data[wbase + static_cast<size_t>(ci) * Co];
                            T* gwc = &gw.data[wbase + static_cast<size_t>(ci) * Co];
                            T acc = T(0);
                            for (int co = 0; co < Co; ++co) {
                                const T g = gyp[co];
                                gwc[co] += xv * g;
                                acc += wc[co] * g;
                            }
                            gxp[ci] += acc;
                        }
                    }
                }
            }
}

// ---------------------------------------------------------------------------
// depthwise_conv2d — one spatial filter per channel, no cross-channel mixing.

template <typename T>
Tensor<T> depthwise_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    detail::check_map4(x.shape, "depthwise_conv2d");
    if (w.rank() != 3) throw shape_error("depthwise_conv2d: weights must be [kh,kw,c]");
    const int B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    const int kh = w.dim(0), kw = w.dim(1);
    detail::check_kernel_size(kh, kw);
    if (w.dim(2) != C)
        throw shape_error("depthwise_conv2d: channel mismatch, input has " + std::to_string(C) +
                          " channels but kernel has " + std::to_string(w.dim(2)));
    if (b.rank() != 1 || b.dim(0) != C)
        throw shape_error("depthwise_conv2d: bias axis must have length " + std::to_string(C));

    const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
    Tensor<T> y({B, H, W, C});
    for (int bb = 0; bb < B; ++bb)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                T* yp = &y.data[y.idx4(bb, i, j, 0)];
                for (int c = 0; c < C; ++c) yp[c] = b.data[c];
                for (int u = 0; u < kh; ++u) {
                    const int ii = i + u - ph;
                    if (ii < 0 || ii >= H) continue;
                    for (int v = 0; v < kw; ++v) {
                        const int jj = j + v - pw;
                        if (jj < 0 || jj >= W) continue;
                        const T* xp = &x.data[x.idx4(bb, ii, jj, 0)];
                        const T* wp = &w.data[static_cast<size_t>((u * kw) + v) * C];
                        for (int c = 0; c < C; ++c) yp[c] += xp[c] * wp[c];
                    }
                }
            }
    return y;
}

template <typename T>
void depthwise_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy, Tensor<T>& gx,
                        Tensor<T>& gw, Tensor<T>& gb) {
    const int B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    const int kh = w.dim(0), kw = w.dim(1);
    const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
    gx = Tensor<T>(x.shape);
    gw = Tensor<T>(w.shape);
    gb = Tensor<T>({C});
    for (int bb = 0; bb < B; ++bb)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                const T* gyp = &gy.data[gy.idx4(bb, i, j, 0)];
                for (int c = 0; c < C; ++c) gb.data[c] += gyp[c];
                for (int u = 0; u < kh; ++u) {
                    const int ii = i + u - ph;
                    if (ii < 0 || ii >= H) continue;
                    for (int v = 0; v < kw; ++v) {
                        const int jj = j + v - pw;
                        if (jj < 0 || jj >= W) continue;
                        const T* xp = &x.data[x.idx4(bb, ii, jj, 0)];
                        T* gxp = &gx.data[gx.idx4(bb, ii, jj, 0)];
                        const size_t wbase = static_cast<size_t>((u * kw) + v) * C;
                        for (int c = 0; c < C; ++c) {
                            gw.data[wbase + c] += xp[c] * gyp[c];
                            gxp[c] += w.data[wbase + c] * gyp[c];
                        }
                    }
                }
            }
}

// ---------------------------------------------------------------------------
// relu — subgradient at 0 is 0.

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
    Tensor<T> y = x;
    for (T& v : y.data) v = v > T(0) ? v : T(0);
    return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& gy) {
    Tensor<T> gx(x.shape);
    for (int64_t i = 0; i < x.numel(); ++i)
        gx.data[i] = x.data[i] > T(0) ? gy.data[i] : T(0);
    return gx;
}

// ---------------------------------------------------------------------------
// batch normalization

template <typename T>
struct BatchNormStats {
    Tensor<T> running_mean;  // [C]
    Tensor<T> running_var;   // [C]
    bool initialized = false;
    T momentum = T(0.9);
    T epsilon = T(1e-5);

    explicit BatchNormStats(int channels = 1)
        : running_mean({channels}), running_var({channels}) {}
};

template <typename T>
struct BatchNormCache {
    Tensor<T> mean;    // [C] statistics actually used in the forward pass
    Tensor<T> invstd;  // [C]
    bool training = true;
};

// Training mode normalizes with batch statistics over B*H*W samples per
// channel (biased variance) and updates the running estimates in place.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                            BatchNormStats<T>& st, bool training,
                            BatchNormCache<T>* cache = nullptr) {
    detail::check_map4(x.shape, "batchnorm");
    const int B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    if (gamma.numel() != C || beta.numel() != C || st.running_mean.numel() != C)
        throw shape_error("batchnorm: per-channel parameter length must equal " +
                          std::to_string(C));
    const int64_t N = static_cast<int64_t>(B) * H * W;

    Tensor<T> mean({C}), var({C});
    if (training) {
        for (int64_t n = 0; n < N; ++n) {
            const T* xp = &x.data[static_cast<size_t>(n) * C];
            for (int c = 0; c < C; ++c) mean.data[c] += xp[c];
        }
        for (int c = 0; c < C; ++c) mean.data[c] /= static_cast<T>(N);
        for (int64_t n = 0; n < N; ++n) {
            const T* xp = &x.data[static_cast<size_t>(n) * C];
            for (int c = 0; c < C; ++c) {
                const T d = xp[c] - mean.data[c];
                var.data[c] += d * d;
            }
        }
        for (int c = 0; c < C; ++c) var.data[c] /= static_cast<T>(N);
        for (int c = 0; c < C; ++c) {
            st.running_mean.data[c] =
                st.momentum * st.running_mean.data[c] + (T(1) - st.momentum) * mean.data[c];
            st.running_var.data[c] =
                st.momentum * st.running_var.data[c] + (T(1) - st.momentum) * var.data[c];
        }
        st.initialized = true;
    } else {
        if (!st.initialized)
            throw data_error("batchnorm: uninitialized running statistics (train first or seed "
                             "the stats explicitly)");
        mean = st.running_mean;
        var = st.running_var;
    }

    Tensor<T> invstd({C});
    for (int c = 0; c < C; ++c)
        invstd.data[c] = T(1) / std::sqrt(var.data[c] + st.epsilon);

    Tensor<T> y(x.shape);
    for (int64_t n = 0; n < N; ++n) {
        const T* xp = &x.data[static_cast<size_t>(n) * C];
        T* yp = &y.data[static_cast<size_t>(n) * C];
        for (int c = 0; c < C; ++c)
            yp[c] = gamma.data[c] * (xp[c] - mean.data[c]) * invstd.data[c] + beta.data[c];
    }
    if (cache) {
        cache->mean = mean;
        cache->invstd = invstd;
        cache->training = training;
    }
    return y;
}

template <typename T>
void batchnorm_backward(const Tensor<T>& x, const Tensor<T>& gamma, const BatchNormCache<T>& cache,
                        const Tensor<T>& gy, Tensor<T>& gx, Tensor<T>& ggamma, Tensor<T>& gbeta) {
    const int C = x.dim(3);
    const int64_t N = x.numel() / C;
    gx = Tensor<T>(x.shape);
    ggamma = Tensor<T>({C});
    gbeta = Tensor<T>({C});

    // Per-channel sums of gy and gy*xhat.
    std::vector<T> sum_gy(static_cast<size_t>(C), T(0)), sum_gyx(static_cast<size_t>(C), T(0));
    for (int64_t n = 0; n < N; ++n) {
        const T* xp = &x.data[static_cast<size_t>(n) * C];
        const T* gp = &gy.data[static_cast<size_t>(n) * C];
        for (int c = 0; c < C; ++c) {
            const T xhat = (xp[c] - cache.mean.data[c]) * cache.invstd.data[c];
            sum_gy[c] += gp[c];
            sum_gyx[c] += gp[c] * xhat;
        }
    }
    for (int c = 0; c < C; ++c) {
        gbeta.data[c] = sum_gy[c];
        ggamma.data[c] = sum_gyx[c];
    }

    if (cache.training) {
        for (int64_t n = 0; n < N; ++n) {
            const T* xp = &x.data[static_cast<size_t>(n) * C];
            const T* gp = &gy.data[static_cast<size_t>(n) * C];
            T* gxp = &gx.data[static_cast<size_t>(n) * C];
            for (int c = 0; c < C; ++c) {
                const T xhat = (xp[c] - cache.mean.data[c]) * cache.invstd.data[c];
                gxp[c] = gamma.data[c] * cache.invstd.data[c] / static_cast<T>(N) *
                         (static_cast<T>(N) * gp[c] - sum_gy[c] - xhat * sum_gyx[c]);
            }
        }
    } else {
        // Running statistics are constants in inference mode.
        for (int64_t n = 0; n < N; ++n) {
            const T* gp = &gy.data[static_cast<size_t>(n) * C];
            T* gxp = &gx.data[static_cast<size_t>(n) * C];
            for (int c = 0; c < C; ++c)
                gxp[c] = gp[c] * gamma.data[c] * cache.invstd.data[c];
        }
    }
}

// ---------------------------------------------------------------------------
// bilinear_resize — half-pixel convention src = (dst + 0.5)/s − 0.5, clamped.

namespace detail {

template <typename T>
struct LerpAxis {
    std::vector<int> lo, hi;
    std::vector<T> w_hi;  // weight of the hi sample; lo gets 1-w_hi
};

template <typename T>
LerpAxis<T> make_lerp_axis(int src, int dst, int scale) {
    LerpAxis<T> ax;
    ax.lo.resize(dst);
    ax.hi.resize(dst);
    ax.w_hi.resize(dst);
    for (int d = 0; d < dst; ++d) {
        double s = (d + 0.5) / scale - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(src - 1));
        const int lo = static_cast<int>(std::floor(s));
        ax.lo[d] = lo;
        ax.hi[d] = std::min(lo + 1, src - 1);
        ax.w_hi[d] = static_cast<T>(s - lo);
    }
    return ax;
}

}  // namespace detail

template <typename T>
Tensor<T> bilinear_forward(const Tensor<T>& x, int scale) {
    detail::check_map4(x.shape, "bilinear_resize");
    if (scale < 1) throw shape_error("bilinear_resize: scale must be >= 1");
    const int B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    const int Ho = H * scale, Wo = W * scale;
    const auto ay = detail::make_lerp_axis<T>(H, Ho, scale);
    const auto axx = detail::make_lerp_axis<T>(W, Wo, scale);
    Tensor<T> y({B, Ho, Wo, C});
    for (int bb = 0; bb < B; ++bb)
        for (int i = 0; i < Ho; ++i) {
            const T wy = ay.w_hi[i];
            for (int j = 0; j < Wo; ++j) {
                const T wx = axx.w_hi[j];
                const T* p00 = &x.data[x.idx4(bb, ay.lo[i], axx.lo[j], 0)];
                const T* p01 = &x.data[x.idx4(bb, ay.lo[i], axx.hi[j], 0)];
                const T* p10 = &x.data[x.idx4(bb, ay.hi[i], axx.lo[j], 0)];
                const T* p11 = &x.data[x.idx4(bb, ay.hi[i], axx.hi[j], 0)];
                T* yp = &y.data[y.idx4(bb, i, j, 0)];
                for (int c = 0; c < C; ++c)
                    yp[c] = (T(1) - wy) * ((T(1) - wx) * p00[c] + wx * p01[c]) +
                            wy * ((T(1) - wx) * p10[c] + wx * p11[c]);
            }
        }
    return y;
}

template <typename T>
Tensor<T> bilinear_backward(const std::vector<int>& xshape, int scale, const Tensor<T>& gy) {
    const int B = xshape[0], H = xshape[1], W = xshape[2], C = xshape[3];
    const int Ho = H * scale, Wo = W * scale;
    const auto ay = detail::make_lerp_axis<T>(H, Ho, scale);
    const auto axx = detail::make_lerp_axis<T>(W, Wo, scale);
    Tensor<T> gx(xshape);
    for (int bb = 0; bb < B; ++bb)
        for (int i = 0; i < Ho; ++i) {
            const T wy = ay.w_hi[i];
            for (int j = 0; j < Wo; ++j) {
                const T wx = axx.w_hi[j];
                const T* gp = &gy.data[gy.idx4(bb, i, j, 0)];
                T* p00 = &gx.data[gx.idx4(bb, ay.lo[i], axx.lo[j], 0)];
                T* p01 = &gx.data[gx.idx4(bb, ay.lo[i], axx.hi[j], 0)];
                T* p10 = &gx.data[gx.idx4(bb, ay.hi[i], axx.lo[j], 0)];
                T* p11 = &gx.data[gx.idx4(bb, ay.hi[i], axx.hi[j], 0)];
                for (int c = 0; c < C; ++c) {
                    p00[c] += (T(1) - wy) * (T(1) - wx) * gp[c];
                    p01[c] += (T(1) - wy) * wx * gp[c];
                    p10[c] += wy * (T(1) - wx) * gp[c];
                    p11[c] += wy * wx * gp[c];
                }
            }
        }
    return gx;
}

// ---------------------------------------------------------------------------
// area_downsample — block mean over s×s source blocks.

template <typename T>
Tensor<T> area_downsample_forward(const Tensor<T>& x, int scale) {
    detail::check_map4(x.shape, "area_downsample");
    if (scale < 1) throw shape_error("area_downsample: scale must be >= 1");
    const int B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    if (H % scale != 0 || W % scale != 0)
        throw shape_error("area_downsample: spatial dims " + std::to_string(H) + "x" +
                          std::to_string(W) + " not divisible by scale " + std::to_string(scale));
    const int Ho = H / scale, Wo = W / scale;
    const T inv = T(1) / static_cast<T>(scale * scale);
    Tensor<T> y({B, Ho, Wo, C});
    for (int bb = 0; bb < B; ++bb)
        for (int i = 0; i < Ho; ++i)
            for (int j = 0; j < Wo; ++j) {
                T* yp = &y.data[y.idx4(bb, i, j, 0)];
                for (int u = 0; u < scale; ++u)
                    for (int v = 0; v < scale; ++v) {
                        const T* xp = &x.data[x.idx4(bb, i * scale + u, j * scale + v, 0)];
                        for (int c = 0; c < C; ++c) yp[c] += xp[c];
                    }
                for (int c = 0; c < C; ++c) yp[c] *= inv;
            }
    return y;
}

template <typename T>
Tensor<T> area_downsample_backward(const std::vector<int>& xshape, int scale, const Tensor<T>& gy) {
    const int B = xshape[0], C = xshape[3];
    const int Ho = gy.dim(1), Wo = gy.dim(2);
    const T inv = T(1) / static_cast<T>(scale * scale);
    Tensor<T> gx(xshape);
    for (int bb = 0; bb < B; ++bb)
        for (int i = 0; i < Ho; ++i)
            for (int j = 0; j < Wo; ++j) {
                const T* gp = &gy.data[gy.idx4(bb, i, j, 0)];
                for (int u = 0; u < scale; ++u)
                    for (int v = 0; v < scale; ++v) {
                        T* xp = &gx.data[gx.idx4(bb, i * scale + u, j * scale + v, 0)];
                        for (int c = 0; c < C; ++c) xp[c] += gp[c] * inv;
                    }
            }
    return gx;
}

// ---------------------------------------------------------------------------
// concat_channels / slice_channels

template <typename T>
Tensor<T> concat_channels_forward(const std::vector<const Tensor<T>*>& xs) {
    if (xs.empty()) throw shape_error("concat_channels: no inputs");
    const auto& first = *xs[0];
    detail::check_map4(first.shape, "concat_channels");
    int Ctot = 0;
    for (const auto* x : xs) {
        detail::check_map4(x->shape, "concat_channels");
        for (int a = 0; a < 3; ++a)
            if (x->dim(a) != first.dim(a))
                throw shape_error("concat_channels: non-channel axis mismatch " +
                                  shape_str(x->shape) + " vs " + shape_str(first.shape));
        Ctot += x->dim(3);
    }
    const int B = first.dim(0), H = first.dim(1), W = first.dim(2);
    Tensor<T> y({B, H, W, Ctot});
    const int64_t N = static_cast<int64_t>(B) * H * W;
    for (int64_t n = 0; n < N; ++n) {
        T* yp = &y.data[static_cast<size_t>(n) * Ctot];
        int off = 0;
        for (const auto* x : xs) {
            const int c = x->dim(3);
            const T* xp = &x->data[static_cast<size_t>(n) * c];
            std::copy(xp, xp + c, yp + off);
            off += c;
        }
    }
    return y;
}

template <typename T>
std::vector<Tensor<T>> concat_channels_backward(const std::vector<std::vector<int>>& shapes,
                                                const Tensor<T>& gy) {
    std::vector<Tensor<T>> gs;
    gs.reserve(shapes.size());
    for (const auto& s : shapes) gs.emplace_back(s);
    const int Ctot = gy.dim(3);
    const int64_t N = gy.numel() / Ctot;
    for (int64_t n = 0; n < N; ++n) {
        const T* gp = &gy.data[static_cast<size_t>(n) * Ctot];
        int off = 0;
        for (auto& g : gs) {
            const int c = g.dim(3);
            T* dst = &g.data[static_cast<size_t>(n) * c];
            std::copy(gp + off, gp + off + c, dst);
            off += c;
        }
    }
    return gs;
}

// Band slice along the last axis; works for any rank.
template <typename T>
Tensor<T> slice_last_axis(const Tensor<T>& x, int start, int end) {
    const int C = x.shape.back();
    if (start < 0 || end > C || start >= end)
        throw shape_error("slice_last_axis: interval [" + std::to_string(start) + "," +
                          std::to_string(end) + ") out of range for " + std::to_string(C) +
                          " channels");
    std::vector<int> oshape = x.shape;
    oshape.back() = end - start;
    Tensor<T> y(oshape);
    const int64_t N = x.numel() / C;
    const int c = end - start;
    for (int64_t n = 0; n < N; ++n)
        std::copy(&x.data[static_cast<size_t>(n) * C + start],
                  &x.data[static_cast<size_t>(n) * C + end], &y.data[static_cast<size_t>(n) * c]);
    return y;
}

// ---------------------------------------------------------------------------
// add

template <typename T>
Tensor<T> add_forward(const Tensor<T>& x, const Tensor<T>& y) {
    require_same_shape(x, y, "add");
    Tensor<T> z = x;
    for (int64_t i = 0; i < z.numel(); ++i) z.data[i] += y.data[i];
    return z;
}

// ---------------------------------------------------------------------------
// l1 loss

template <typename T>
T l1_loss_forward(const Tensor<T>& pred, const Tensor<T>& target) {
    require_same_shape(pred, target, "l1_loss");
    T acc = T(0);
    for (int64_t i = 0; i < pred.numel(); ++i) acc += std::abs(pred.data[i] - target.data[i]);
    return acc / static_cast<T>(pred.numel());
}

// Adjoint: sign(pred - target)/N, with sign(0) = 0.
template <typename T>
Tensor<T> l1_loss_backward(const Tensor<T>& pred, const Tensor<T>& target, T upstream) {
    Tensor<T> g(pred.shape);
    const T inv = upstream / static_cast<T>(pred.numel());
    for (int64_t i = 0; i < pred.numel(); ++i) {
        const T d = pred.data[i] - target.data[i];
        g.data[i] = d > T(0) ? inv : (d < T(0) ? -inv : T(0));
    }
    return g;
}

template <typename T>
T mse_loss_forward(const Tensor<T>& pred, const Tensor<T>& target) {
    require_same_shape(pred, target, "mse_loss");
    T acc = T(0);
    for (int64_t i = 0; i < pred.numel(); ++i) {
        const T d = pred.data[i] - target.data[i];
        acc += d * d;
    }
    return acc / static_cast<T>(pred.numel());
}

template <typename T>
Tensor<T> mse_loss_backward(const Tensor<T>& pred, const Tensor<T>& target, T upstream) {
    Tensor<T> g(pred.shape);
    const T k = T(2) * upstream / static_cast<T>(pred.numel());
    for (int64_t i = 0; i < pred.numel(); ++i) g.data[i] = k * (pred.data[i] - target.data[i]);
    return g;
}

}  // namespace fgin
