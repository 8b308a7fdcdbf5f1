#pragma once

#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgin/autodiff.hpp"
#include "fgin/bands.hpp"
#include "fgin/params.hpp"

namespace fgin {

enum class UpsamplingMode { kOptimized, kBilinearOnly };

// Architecture hyperparameters and ablation flags. The six structural
// variants of the ablation study (no band grouping, group sizes 16/32/48,
// no spectral fusion, bilinear-only upsampling) are all reachable from here.
struct ModelConfig {
    int group_size = 32;
    int overlap = 8;  // bands shared by consecutive groups (one fourth of 32)
    int feature_width = 32;
    int inception_blocks = 3;
    int scale = 4;
    bool use_band_grouping = true;
    bool use_spectral_fusion = true;
    UpsamplingMode upsampling = UpsamplingMode::kOptimized;
    bool use_global_residual = true;
    int full_bands = 0;  // cube band count; required when band grouping is off

    int in_bands() const { return use_band_grouping ? group_size : full_bands; }

    void validate() const {
        if (feature_width <= 0) throw data_error("feature_width must be positive");
        if (feature_width % 2 != 0)
            throw data_error("feature width must be even for branch split");
        if (use_band_grouping) {
            if (overlap <= 0 || overlap >= group_size)
                throw data_error("require 0 < overlap < group_size");
        } else if (full_bands <= 0) {
            throw data_error("full_bands must be set when band grouping is disabled");
        }
        if (scale != 1 && scale != 2 && scale != 4 && scale != 8)
            throw data_error("scale must be one of {1,2,4,8}");
        if (inception_blocks < 0) throw data_error("inception_blocks must be >= 0");
    }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{{"group_size", c.group_size},
                       {"overlap", c.overlap},
                       {"feature_width", c.feature_width},
                       {"inception_blocks", c.inception_blocks},
                       {"scale", c.scale},
                       {"use_band_grouping", c.use_band_grouping},
                       {"use_spectral_fusion", c.use_spectral_fusion},
                       {"upsampling", c.upsampling == UpsamplingMode::kOptimized ? "optimized"
                                                                                 : "bilinear"},
                       {"use_global_residual", c.use_global_residual},
                       {"full_bands", c.full_bands}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
    j.at("group_size").get_to(c.group_size);
    j.at("overlap").get_to(c.overlap);
    j.at("feature_width").get_to(c.feature_width);
    j.at("inception_blocks").get_to(c.inception_blocks);
    j.at("scale").get_to(c.scale);
    j.at("use_band_grouping").get_to(c.use_band_grouping);
    j.at("use_spectral_fusion").get_to(c.use_spectral_fusion);
    c.upsampling = j.at("upsampling").get<std::string>() == "optimized"
                       ? UpsamplingMode::kOptimized
                       : UpsamplingMode::kBilinearOnly;
    j.at("use_global_residual").get_to(c.use_global_residual);
    j.at("full_bands").get_to(c.full_bands);
}

// Trainable-parameter census as a pure function of the config
// (weights + biases + BN gamma/beta; running stats excluded).
inline int64_t param_count(const ModelConfig& cfg) {
    cfg.validate();
    const int64_t G = cfg.in_bands();
    const int64_t F = cfg.feature_width;
    const int64_t Hh = F / 2;
    auto conv = [](int64_t k, int64_t ci, int64_t co) { return k * k * ci * co + co; };
    auto bn = [](int64_t c) { return 2 * c; };

    int64_t n = 0;
    n += conv(3, G, F);  // shallow
    if (cfg.use_spectral_fusion) n += conv(1, F, F) + conv(3, F, F);
    // Inception block: four branches (1x1, 1x1->3x3, 1x1->5x5, 1x1), each
    // stage relu(BN(conv)), widths F -> F/2; fuse 1x1 (2F -> F) + BN.
    const int64_t incep = conv(1, F, Hh) + bn(Hh) +                       // b1
                          conv(1, F, Hh) + bn(Hh) + conv(3, Hh, Hh) + bn(Hh) +  // b2
                          conv(1, F, Hh) + bn(Hh) + conv(5, Hh, Hh) + bn(Hh) +  // b3
                          conv(1, F, Hh) + bn(Hh) +                       // b4
                          conv(1, 2 * F, F) + bn(F);                      // fuse
    n += incep * cfg.inception_blocks;
    // Multi-scale fusion: parallel 1x1/3x3/5x5 (F -> F/2 each), fuse 1x1.
    n += conv(1, F, Hh) + conv(3, F, Hh) + conv(5, F, Hh) + conv(1, 3 * Hh, F);
    if (cfg.upsampling == UpsamplingMode::kOptimized)
        n += 3 * 3 * F + F + bn(F);  // depthwise 3x3 + BN
    n += conv(3, F, G);              // final projection
    return n;
}

// The per-group FGIN network. One instance (one weight set) processes every
// band group.
template <typename T>
class FginModel {
public:
    ModelConfig cfg;
    ParamStore<T> params;
    std::vector<BatchNormStats<T>> bn_stats;
    std::vector<std::string> bn_names;

    FginModel() = default;

    explicit FginModel(const ModelConfig& c, uint64_t seed = 42) : cfg(c) {
        cfg.validate();
        std::mt19937_64 rng(seed);
        build(rng);
        if (params.census() != param_count(cfg))
            throw error("internal: parameter census mismatch");
    }

    // Builds the forward graph for one band group. x: [B,h,w,G].
    Var<T> forward(const Var<T>& x, bool training) {
        bind_graph_params();
        const int G = cfg.in_bands();
        if (x.value().dim(3) != G)
            throw shape_error("fgin_forward: input has " + std::to_string(x.value().dim(3)) +
                              " bands, model expects " + std::to_string(G));

        Var<T> f = shallow_extract(x);
        f = spectral_spatial_fusion(f);
        for (int k = 0; k < cfg.inception_blocks; ++k) f = inception_block(f, k, training);
        f = multiscale_fusion(f);
        f = upsample_block(f, training);

        Var<T> out = conv2d(f, var("proj.w"), var("proj.b"));
        if (cfg.use_global_residual) out = add(out, bilinear_resize(x, cfg.scale));
        return out;
    }

    // relu(conv3x3), G -> F channels.
    Var<T> shallow_extract(const Var<T>& x) {
        bind_graph_params();
        return relu(conv2d(x, var("shallow.w"), var("shallow.b")));
    }

    // Sequential 1x1 then 3x3 with a residual add; identity when the
    // ablation flag disables the block.
    Var<T> spectral_spatial_fusion(const Var<T>& x) {
        if (!cfg.use_spectral_fusion) return x;
        bind_graph_params();
        Var<T> hs = relu(conv2d(x, var("fusion.spectral.w"), var("fusion.spectral.b")));
        Var<T> hsp = relu(conv2d(hs, var("fusion.spatial.w"), var("fusion.spatial.b")));
        return relu(add(hsp, x));
    }

    // Four parallel branches (1x1, 1x1->3x3, 1x1->5x5, 1x1), channel concat,
    // 1x1 fuse, BN before the residual add, ReLU after.
    Var<T> inception_block(const Var<T>& x, int k, bool training) {
        bind_graph_params();
        const std::string p = "incep" + std::to_string(k);
        auto stage = [&](const Var<T>& in, const std::string& s) {
            return relu(bn(conv2d(in, var(s + ".w"), var(s + ".b")), s + ".bn", training));
        };
        Var<T> b1 = stage(x, p + ".b1");
        Var<T> b2 = stage(stage(x, p + ".b2.reduce"), p + ".b2.conv");
        Var<T> b3 = stage(stage(x, p + ".b3.reduce"), p + ".b3.conv");
        Var<T> b4 = stage(x, p + ".b4");
        Var<T> cat = concat_channels<T>({b1, b2, b3, b4});
        Var<T> fused =
            bn(conv2d(cat, var(p + ".fuse.w"), var(p + ".fuse.b")), p + ".fuse.bn", training);
        return relu(add(fused, x));
    }

    // Parallel 1x1/3x3/5x5 convolutions, concat, 1x1 projection. No BN, no
    // residual.
    Var<T> multiscale_fusion(const Var<T>& x) {
        bind_graph_params();
        Var<T> b1 = relu(conv2d(x, var("ms.b1.w"), var("ms.b1.b")));
        Var<T> b2 = relu(conv2d(x, var("ms.b2.w"), var("ms.b2.b")));
        Var<T> b3 = relu(conv2d(x, var("ms.b3.w"), var("ms.b3.b")));
        Var<T> cat = concat_channels<T>({b1, b2, b3});
        return relu(conv2d(cat, var("ms.fuse.w"), var("ms.fuse.b")));
    }

    // Bilinear upsample refined by a depthwise conv with a bilinear residual
    // shortcut; plain bilinear in the ablation mode.
    Var<T> upsample_block(const Var<T>& x, bool training) {
        bind_graph_params();
        Var<T> up = bilinear_resize(x, cfg.scale);
        if (cfg.upsampling == UpsamplingMode::kBilinearOnly) return up;
        Var<T> d = relu(bn(depthwise_conv2d(up, var("up.dw.w"), var("up.dw.b")), "up.bn",
                           training));
        return add(d, bilinear_resize(x, cfg.scale));
    }

    // Convenience forward without gradient bookkeeping.
    Tensor<T> forward_tensor(const Tensor<T>& x, bool training) {
        Var<T> in = Var<T>::leaf(x, false);
        return forward(in, training).value();
    }

    // Copies gradients accumulated on the current graph's parameter leaves
    // into the ParamStore buffers (adding, so multi-graph batches compose).
    void collect_grads() {
        for (size_t i = 0; i < params.size(); ++i) {
            auto& p = params.items()[i];
            const Var<T>& leaf = leaves_[i];
            if (leaf.valid() && leaf.has_grad()) {
                const auto& g = leaf.grad();
                for (int64_t k = 0; k < g.numel(); ++k) p.grad.data[k] += g.data[k];
                p.has_grad = true;
            }
        }
    }

    BatchNormStats<T>& stats(const std::string& name) {
        for (size_t i = 0; i < bn_names.size(); ++i)
            if (bn_names[i] == name) return bn_stats[i];
        throw data_error("unknown batchnorm state: " + name);
    }

    // Starts a fresh graph: parameter leaves are re-created lazily on the
    // next forward() so gradients from the previous graph are dropped.
    void new_graph() { leaves_.clear(); }

    // Replaces the parameter leaves with externally owned ones (ordered as
    // params.items()); the gradient oracle uses this to probe parameters.
    void set_external_leaves(std::vector<Var<T>> leaves) {
        if (leaves.size() != params.size())
            throw data_error("set_external_leaves: expected " + std::to_string(params.size()) +
                             " leaves");
        leaves_ = std::move(leaves);
    }

    std::vector<Tensor<T>> param_tensors() const {
        std::vector<Tensor<T>> out;
        for (const auto& p : params.items()) out.push_back(p.value);
        return out;
    }

private:
    std::vector<Var<T>> leaves_;  // parallel to params.items()

    Var<T>& var(const std::string& name) { return leaves_[params.index_of(name)]; }

    void bind_graph_params() {
        if (!leaves_.empty()) return;
        leaves_.reserve(params.size());
        for (auto& p : params.items()) leaves_.push_back(Var<T>::leaf(p.value, true));
    }

    Var<T> bn(const Var<T>& x, const std::string& prefix, bool training) {
        return batchnorm(x, var(prefix + ".gamma"), var(prefix + ".beta"), stats(prefix),
                         training);
    }

    void add_conv(std::mt19937_64& rng, const std::string& name, int k, int ci, int co,
                  double gain = 1.0) {
        const double lim = gain * std::sqrt(6.0 / (static_cast<double>(k) * k * ci));
        std::uniform_real_distribution<double> d(-lim, lim);
        Tensor<T> w({k, k, ci, co});
        for (auto& v : w.data) v = static_cast<T>(d(rng));
        params.add(name + ".w", std::move(w));
        params.add(name + ".b", Tensor<T>({co}));
    }

    void add_depthwise(std::mt19937_64& rng, const std::string& name, int k, int c) {
        const double lim = std::sqrt(6.0 / (static_cast<double>(k) * k));
        std::uniform_real_distribution<double> d(-lim, lim);
        Tensor<T> w({k, k, c});
        for (auto& v : w.data) v = static_cast<T>(d(rng));
        params.add(name + ".w", std::move(w));
        params.add(name + ".b", Tensor<T>({c}));
    }

    void add_bn(const std::string& prefix, int c) {
        params.add(prefix + ".gamma", Tensor<T>::full({c}, T(1)));
        params.add(prefix + ".beta", Tensor<T>({c}));
        bn_names.push_back(prefix);
        bn_stats.emplace_back(c);
    }

    void build(std::mt19937_64& rng) {
        const int G = cfg.in_bands();
        const int F = cfg.feature_width;
        const int Hh = F / 2;
        add_conv(rng, "shallow", 3, G, F);
        if (cfg.use_spectral_fusion) {
            add_conv(rng, "fusion.spectral", 1, F, F);
            add_conv(rng, "fusion.spatial", 3, F, F);
        }
        for (int k = 0; k < cfg.inception_blocks; ++k) {
            const std::string p = "incep" + std::to_string(k);
            add_conv(rng, p + ".b1", 1, F, Hh);
            add_bn(p + ".b1.bn", Hh);
            add_conv(rng, p + ".b2.reduce", 1, F, Hh);
            add_bn(p + ".b2.reduce.bn", Hh);
            add_conv(rng, p + ".b2.conv", 3, Hh, Hh);
            add_bn(p + ".b2.conv.bn", Hh);
            add_conv(rng, p + ".b3.reduce", 1, F, Hh);
            add_bn(p + ".b3.reduce.bn", Hh);
            add_conv(rng, p + ".b3.conv", 5, Hh, Hh);
            add_bn(p + ".b3.conv.bn", Hh);
            add_conv(rng, p + ".b4", 1, F, Hh);
            add_bn(p + ".b4.bn", Hh);
            add_conv(rng, p + ".fuse", 1, 2 * F, F);
            add_bn(p + ".fuse.bn", F);
        }
        add_conv(rng, "ms.b1", 1, F, Hh);
        add_conv(rng, "ms.b2", 3, F, Hh);
        add_conv(rng, "ms.b3", 5, F, Hh);
        add_conv(rng, "ms.fuse", 1, 3 * Hh, F);
        if (cfg.upsampling == UpsamplingMode::kOptimized) {
            add_depthwise(rng, "up.dw", 3, F);
            add_bn("up.bn", F);
        }
        // Small-gain init on the projection so the detail branch starts near
        // zero and the global bilinear shortcut dominates early training.
        add_conv(rng, "proj", 3, F, G, 0.1);
    }
};

}  // namespace fgin
