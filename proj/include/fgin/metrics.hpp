#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "fgin/tensor.hpp"

namespace fgin {

// Evaluation contracts. All three metrics operate on [H,W,C] tensors in
// normalized space (data range L = 1.0). MPSNR/MSSIM average per band;
// SAM averages per-pixel spectral angles, reported in degrees.

constexpr double kPsnrCap = 100.0;       // zero-error convention
constexpr double kPsnrMseFloor = 1e-10;  // bands below this MSE hit the cap

struct MetricsReport {
    double mpsnr = 0.0;
    double mssim = 0.0;
    double sam_degrees = 0.0;
    std::vector<double> per_band_psnr;
    double wall_time_seconds = 0.0;
};

inline std::vector<double> per_band_psnr(const Tensor<float>& x, const Tensor<float>& y) {
    require_same_shape(x, y, "mpsnr");
    if (x.rank() != 3) throw shape_error("mpsnr: expected [H,W,C] tensors");
    const int C = x.dim(2);
    const int64_t N = x.numel() / C;
    std::vector<double> mse(static_cast<size_t>(C), 0.0);
    for (int64_t n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const double d = static_cast<double>(x.data[static_cast<size_t>(n) * C + c]) -
                             static_cast<double>(y.data[static_cast<size_t>(n) * C + c]);
            mse[static_cast<size_t>(c)] += d * d;
        }
    std::vector<double> psnr(static_cast<size_t>(C));
    for (int c = 0; c < C; ++c) {
        const double m = mse[static_cast<size_t>(c)] / static_cast<double>(N);
        psnr[static_cast<size_t>(c)] = m < kPsnrMseFloor ? kPsnrCap : 10.0 * std::log10(1.0 / m);
    }
    return psnr;
}

inline double mpsnr(const Tensor<float>& x, const Tensor<float>& y) {
    const auto psnr = per_band_psnr(x, y);
    double acc = 0.0;
    for (double v : psnr) acc += v;
    return acc / static_cast<double>(psnr.size());
}

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(static_cast<size_t>(size));
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        w[static_cast<size_t>(i)] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
        sum += w[static_cast<size_t>(i)];
    }
    for (auto& v : w) v /= sum;
    return w;
}

}  // namespace detail

// Per-band SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
// L=1. Local statistics are taken only where the window fits entirely inside
// the image; the band score is the mean over that valid region.
inline double mssim(const Tensor<float>& x, const Tensor<float>& y, int window = 11,
                    double sigma = 1.5) {
    require_same_shape(x, y, "mssim");
    if (x.rank() != 3) throw shape_error("mssim: expected [H,W,C] tensors");
    const int H = x.dim(0), W = x.dim(1), C = x.dim(2);
    if (H < window || W < window)
        throw data_error("mssim: window exceeds image (" + std::to_string(H) + "x" +
                         std::to_string(W) + " < " + std::to_string(window) + ")");
    const auto g = detail::gaussian_window(window, sigma);
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

    double band_acc = 0.0;
    std::vector<double> ax(static_cast<size_t>(H) * W), ay(ax.size());
    for (int c = 0; c < C; ++c) {
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                ax[static_cast<size_t>(i) * W + j] = x.data[(static_cast<size_t>(i) * W + j) * C + c];
                ay[static_cast<size_t>(i) * W + j] = y.data[(static_cast<size_t>(i) * W + j) * C + c];
            }
        double acc = 0.0;
        int64_t count = 0;
        for (int i = 0; i + window <= H; ++i)
            for (int j = 0; j + window <= W; ++j) {
                double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
                for (int u = 0; u < window; ++u)
                    for (int v = 0; v < window; ++v) {
                        const double wgt = g[static_cast<size_t>(u)] * g[static_cast<size_t>(v)];
                        const double xv = ax[static_cast<size_t>(i + u) * W + (j + v)];
                        const double yv = ay[static_cast<size_t>(i + u) * W + (j + v)];
                        mx += wgt * xv;
                        my += wgt * yv;
                        sxx += wgt * xv * xv;
                        syy += wgt * yv * yv;
                        sxy += wgt * xv * yv;
                    }
                const double vx = sxx - mx * mx;
                const double vy = syy - my * my;
                const double cov = sxy - mx * my;
                acc += ((2 * mx * my + c1) * (2 * cov + c2)) /
                       ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++count;
            }
        band_acc += acc / static_cast<double>(count);
    }
    return band_acc / static_cast<double>(C);
}

// Mean per-pixel angle between spectral vectors, in degrees. Pixels where
// either spectrum has near-zero norm contribute 0.
inline double sam(const Tensor<float>& x, const Tensor<float>& y) {
    require_same_shape(x, y, "sam");
    if (x.rank() != 3) throw shape_error("sam: expected [H,W,C] tensors");
    const int C = x.dim(2);
    const int64_t N = x.numel() / C;
    double acc = 0.0;
    for (int64_t n = 0; n < N; ++n) {
        const float* xp = &x.data[static_cast<size_t>(n) * C];
        const float* yp = &y.data[static_cast<size_t>(n) * C];
        double dot = 0, nx = 0, ny = 0;
        for (int c = 0; c < C; ++c) {
            dot += static_cast<double>(xp[c]) * yp[c];
            nx += static_cast<double>(xp[c]) * xp[c];
            ny += static_cast<double>(yp[c]) * yp[c];
        }
        nx = std::sqrt(nx);
        ny = std::sqrt(ny);
        if (nx < 1e-12 || ny < 1e-12) continue;
        const double cosang = std::clamp(dot / (nx * ny), -1.0, 1.0);
        acc += std::acos(cosang);
    }
    return acc / static_cast<double>(N) * 180.0 / M_PI;
}

inline MetricsReport compute_metrics(const Tensor<float>& pred, const Tensor<float>& ref) {
    MetricsReport r;
    r.per_band_psnr = per_band_psnr(pred, ref);
    double acc = 0.0;
    for (double v : r.per_band_psnr) acc += v;
    r.mpsnr = acc / static_cast<double>(r.per_band_psnr.size());
    r.mssim = mssim(pred, ref);
    r.sam_degrees = sam(pred, ref);
    return r;
}

inline std::string metrics_kv(const MetricsReport& r) {
    std::ostringstream os;
    os << "mpsnr_db " << r.mpsnr << "\nmssim " << r.mssim << "\nsam_deg " << r.sam_degrees
       << "\nwall_time_s " << r.wall_time_seconds << '\n';
    return os.str();
}

}  // namespace fgin
