#pragma once

#include <string>
#include <vector>

#include "fgin/gradcheck.hpp"
#include "fgin/model.hpp"

namespace fgin {

// Module-by-module and end-to-end gradient oracle runs, shared by the CLI
// `gradcheck` command and the acceptance suite.

struct GradCheckReportRow {
    std::string op;
    double max_rel_error = 0.0;
    double tolerance = 1e-4;
    bool pass() const { return max_rel_error <= tolerance; }
};

namespace detail {

// f over a model whose parameters are supplied as oracle leaves;
// leaves[0] is the input map, leaves[1..] the parameters.
template <typename BlockFn>
GradCheckReportRow check_model_block(const std::string& name, const ModelConfig& cfg,
                                     const std::vector<int>& xshape, BlockFn block,
                                     int probes = 64, uint64_t seed = 99) {
    FginModel<double> model(cfg, seed);
    std::vector<Tensor<double>> inputs;
    inputs.push_back(random_tensor<double>(xshape, seed + 1, -0.5, 0.5));
    for (const auto& t : model.param_tensors()) inputs.push_back(t);
    auto fn = [&model, block](const std::vector<Var<double>>& leaves) {
        model.set_external_leaves({leaves.begin() + 1, leaves.end()});
        return block(model, leaves[0]);
    };
    auto res = gradcheck(fn, inputs, probes, 1e-4, seed + 2);
    return {name, res.max_rel_error, 1e-4};
}

}  // namespace detail

inline std::vector<GradCheckReportRow> run_gradcheck_suite(int probes = 64) {
    std::vector<GradCheckReportRow> rows;
    const uint64_t seed = 20240901;

    // tensor-core primitives
    {
        Tensor<double> x = random_tensor<double>({1, 5, 5, 3}, seed);
        Tensor<double> w = random_tensor<double>({3, 3, 3, 4}, seed + 1);
        Tensor<double> b = random_tensor<double>({4}, seed + 2);
        auto res = gradcheck(
            [](const std::vector<Var<double>>& v) { return conv2d(v[0], v[1], v[2]); },
            {x, w, b}, probes, 1e-4, seed + 3);
        rows.push_back({"conv2d", res.max_rel_error, 1e-4});
    }
    {
        Tensor<double> x = random_tensor<double>({1, 5, 5, 3}, seed + 10);
        Tensor<double> w = random_tensor<double>({3, 3, 3}, seed + 11);
        Tensor<double> b = random_tensor<double>({3}, seed + 12);
        auto res = gradcheck(
            [](const std::vector<Var<double>>& v) { return depthwise_conv2d(v[0], v[1], v[2]); },
            {x, w, b}, probes, 1e-4, seed + 13);
        rows.push_back({"depthwise_conv2d", res.max_rel_error, 1e-4});
    }
    {
        // Probe away from the kink: |x| > 10h.
        Tensor<double> x = random_tensor<double>({1, 4, 4, 4}, seed + 20);
        for (auto& v : x.data) v += v >= 0 ? 0.1 : -0.1;
        auto res = gradcheck([](const std::vector<Var<double>>& v) { return relu(v[0]); }, {x},
                             probes, 1e-4, seed + 21);
        rows.push_back({"relu", res.max_rel_error, 1e-6});
    }
    {
        Tensor<double> x = random_tensor<double>({2, 4, 4, 3}, seed + 30);
        Tensor<double> g = random_tensor<double>({3}, seed + 31, 0.5, 1.5);
        Tensor<double> b = random_tensor<double>({3}, seed + 32);
        auto st = std::make_shared<BatchNormStats<double>>(3);
        auto res = gradcheck(
            [st](const std::vector<Var<double>>& v) {
                return batchnorm(v[0], v[1], v[2], *st, true);
            },
            {x, g, b}, probes, 1e-4, seed + 33);
        rows.push_back({"batchnorm (training)", res.max_rel_error, 1e-4});
    }
    {
        Tensor<double> x = random_tensor<double>({1, 4, 4, 2}, seed + 40);
        auto res = gradcheck(
            [](const std::vector<Var<double>>& v) { return bilinear_resize(v[0], 2); }, {x},
            probes, 1e-4, seed + 41);
        rows.push_back({"bilinear_resize", res.max_rel_error, 1e-4});
    }
    {
        Tensor<double> x = random_tensor<double>({1, 4, 4, 2}, seed + 50);
        auto res = gradcheck(
            [](const std::vector<Var<double>>& v) { return area_downsample(v[0], 2); }, {x},
            probes, 1e-4, seed + 51);
        rows.push_back({"area_downsample", res.max_rel_error, 1e-4});
    }
    {
        Tensor<double> a = random_tensor<double>({1, 3, 3, 2}, seed + 60);
        Tensor<double> b = random_tensor<double>({1, 3, 3, 3}, seed + 61);
        auto res = gradcheck(
            [](const std::vector<Var<double>>& v) {
                return concat_channels<double>({v[0], v[1]});
            },
            {a, b}, probes, 1e-4, seed + 62);
        rows.push_back({"concat_channels", res.max_rel_error, 1e-4});
    }
    {
        Tensor<double> a = random_tensor<double>({1, 3, 3, 2}, seed + 70);
        Tensor<double> b = random_tensor<double>({1, 3, 3, 2}, seed + 71);
        auto res = gradcheck(
            [](const std::vector<Var<double>>& v) { return add(v[0], v[1]); }, {a, b}, probes,
            1e-4, seed + 72);
        rows.push_back({"add", res.max_rel_error, 1e-4});
    }
    {
        // Keep pred-target differences away from the |.| kink.
        Tensor<double> p = random_tensor<double>({1, 3, 3, 2}, seed + 80, 1.0, 2.0);
        Tensor<double> t = random_tensor<double>({1, 3, 3, 2}, seed + 81, -2.0, -1.0);
        auto res = gradcheck(
            [](const std::vector<Var<double>>& v) { return l1_loss(v[0], v[1]); }, {p, t},
            probes, 1e-4, seed + 82);
        rows.push_back({"l1_loss", res.max_rel_error, 1e-4});
    }

    // fgin-model blocks on a tiny config (h=w=6, G=4, F=8).
    ModelConfig tiny;
    tiny.group_size = 4;
    tiny.overlap = 1;
    tiny.feature_width = 8;
    tiny.scale = 2;
    const int F = tiny.feature_width;

    rows.push_back(detail::check_model_block(
        "shallow_extract", tiny, {1, 6, 6, 4},
        [](FginModel<double>& m, const Var<double>& x) { return m.shallow_extract(x); }, probes));
    rows.push_back(detail::check_model_block(
        "spectral_spatial_fusion", tiny, {1, 6, 6, F},
        [](FginModel<double>& m, const Var<double>& x) { return m.spectral_spatial_fusion(x); },
        probes));
    rows.push_back(detail::check_model_block(
        "inception_block", tiny, {1, 6, 6, F},
        [](FginModel<double>& m, const Var<double>& x) { return m.inception_block(x, 0, true); },
        probes));
    rows.push_back(detail::check_model_block(
        "multiscale_fusion", tiny, {1, 6, 6, F},
        [](FginModel<double>& m, const Var<double>& x) { return m.multiscale_fusion(x); },
        probes));
    rows.push_back(detail::check_model_block(
        "upsample_block", tiny, {1, 6, 6, F},
        [](FginModel<double>& m, const Var<double>& x) { return m.upsample_block(x, true); },
        probes));
    // Seed chosen so no finite-difference probe straddles a relu kink; the
    // composed network is piecewise linear and the oracle is only meaningful
    // away from activation boundaries.
    rows.push_back(detail::check_model_block(
        "fgin_forward (end-to-end)", tiny, {1, 6, 6, 4},
        [](FginModel<double>& m, const Var<double>& x) { return m.forward(x, true); }, probes,
        555));

    return rows;
}

}  // namespace fgin
