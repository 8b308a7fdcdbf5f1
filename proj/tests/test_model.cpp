#include <catch2/catch_amalgamated.hpp>

#include "fgin/gradcheck.hpp"
#include "fgin/model.hpp"

using namespace fgin;

namespace {

ModelConfig tiny_config() {
    ModelConfig c;
    c.group_size = 4;
    c.overlap = 1;
    c.feature_width = 8;
    c.scale = 2;
    return c;
}

}  // namespace

TEST_CASE("default parameter census matches hand arithmetic") {
    // Independently re-derived layer by layer (G=32, F=32, half width 16):
    //   shallow 3x3 32->32:            3*3*32*32 + 32           = 9248
    //   fusion 1x1 + 3x3 (32->32):     1056 + 9248              = 10304
    //   inception block:
    //     b1 1x1 32->16 + BN:          528 + 32                 = 560
    //     b2 reduce + 3x3 + 2 BN:      560 + 2352               = 2912
    //     b3 reduce + 5x5 + 2 BN:      560 + 6448               = 7008
    //     b4 1x1 32->16 + BN:                                     560
    //     fuse 1x1 64->32 + BN:        2080 + 64                = 2144
    //     block total                                            13184
    //   three blocks:                                            39552
    //   multiscale 1x1/3x3/5x5 + fuse: 528+4624+12816+1568      = 19536
    //   upsample depthwise 3x3 + BN:   288 + 32 + 64            = 384
    //   projection 3x3 32->32:                                    9248
    ModelConfig cfg;  // defaults: G=32, F=32, 3 blocks, optimized upsampling
    REQUIRE(param_count(cfg) == 9248 + 10304 + 39552 + 19536 + 384 + 9248);
    REQUIRE(param_count(cfg) == 88272);

    FginModel<float> model(cfg, 1);
    REQUIRE(model.params.census() == 88272);
}

TEST_CASE("the six structural variants have distinct pinned censuses") {
    ModelConfig base;  // full model, group size 32

    ModelConfig g16 = base;
    g16.group_size = 16;
    g16.overlap = 4;

    ModelConfig g48 = base;
    g48.group_size = 48;
    g48.overlap = 12;

    ModelConfig nogroup = base;
    nogroup.use_band_grouping = false;
    nogroup.full_bands = 103;

    ModelConfig nofusion = base;
    nofusion.use_spectral_fusion = false;

    ModelConfig bilin = base;
    bilin.upsampling = UpsamplingMode::kBilinearOnly;

    // Only shallow + projection depend on the group width:
    // g16 swaps 9248+9248 for 4640+4624, g48 for 13856+13872,
    // nogroup(103) for 29696+29767. Fusion removes 10304; bilinear-only
    // upsampling removes the 384-parameter refinement.
    REQUIRE(param_count(base) == 88272);
    REQUIRE(param_count(g16) == 79040);
    REQUIRE(param_count(g48) == 97504);
    REQUIRE(param_count(nogroup) == 129239);
    REQUIRE(param_count(nofusion) == 77968);
    REQUIRE(param_count(bilin) == 87888);

    std::vector<int64_t> all{param_count(base),    param_count(g16),
                             param_count(g48),     param_count(nogroup),
                             param_count(nofusion), param_count(bilin)};
    std::sort(all.begin(), all.end());
    REQUIRE(std::adjacent_find(all.begin(), all.end()) == all.end());
}

TEST_CASE("census is independent of the number of band groups") {
    // One weight set serves every group, so splitting 103 bands into four
    // groups of 32 costs exactly the same as a single group of 32.
    ModelConfig cfg;
    FginModel<float> m(cfg, 3);
    GroupSpec four = make_groups(103, cfg.group_size, cfg.overlap);
    REQUIRE(four.intervals.size() == 4);
    REQUIRE(m.params.census() == param_count(cfg));
}

TEST_CASE("forward shape contract") {
    ModelConfig cfg = tiny_config();
    FginModel<float> m(cfg, 11);
    Tensor<float> x = random_tensor<float>({2, 6, 5, 4}, 12);
    Tensor<float> y = m.forward_tensor(x, true);
    REQUIRE(y.shape == std::vector<int>{2, 12, 10, 4});

    cfg.scale = 4;
    FginModel<float> m4(cfg, 11);
    m4.new_graph();
    REQUIRE(m4.forward_tensor(x, true).shape == std::vector<int>{2, 24, 20, 4});
}

TEST_CASE("forward rejects a band-count mismatch") {
    FginModel<float> m(tiny_config(), 13);
    Tensor<float> x = random_tensor<float>({1, 6, 6, 5}, 14);
    REQUIRE_THROWS_AS(m.forward_tensor(x, true), shape_error);
}

TEST_CASE("disabled spectral fusion is the exact identity") {
    ModelConfig cfg = tiny_config();
    cfg.use_spectral_fusion = false;
    FginModel<float> m(cfg, 15);
    Tensor<float> f = random_tensor<float>({1, 6, 6, 8}, 16);
    Var<float> fv = Var<float>::leaf(f, false);
    Var<float> out = m.spectral_spatial_fusion(fv);
    REQUIRE(out.value().data == f.data);
}

TEST_CASE("bilinear-only upsampling equals the plain resize bitwise") {
    ModelConfig cfg = tiny_config();
    cfg.upsampling = UpsamplingMode::kBilinearOnly;
    FginModel<float> m(cfg, 17);
    Tensor<float> f = random_tensor<float>({1, 6, 6, 8}, 18);
    Var<float> fv = Var<float>::leaf(f, false);
    Tensor<float> got = m.upsample_block(fv, true).value();
    Tensor<float> want = bilinear_forward(f, cfg.scale);
    REQUIRE(got.data == want.data);
}

TEST_CASE("zero network reduces to the bilinear interpolant") {
    // With every weight, bias, gamma and beta zeroed, each branch emits zero
    // maps and only the global bilinear shortcut survives.
    for (int s : {2, 4, 8}) {
        ModelConfig cfg = tiny_config();
        cfg.scale = s;
        FginModel<float> m(cfg, 19);
        m.params.zero_values();
        m.new_graph();
        Tensor<float> x = random_tensor<float>({1, 6, 6, 4}, 20 + s);
        Tensor<float> y = m.forward_tensor(x, true);
        Tensor<float> want = bilinear_forward(x, s);
        REQUIRE(y.shape == want.shape);
        float worst = 0.0f;
        for (size_t i = 0; i < y.data.size(); ++i)
            worst = std::max(worst, std::abs(y.data[i] - want.data[i]));
        INFO("scale " << s << " max abs deviation " << worst);
        REQUIRE(worst <= 1e-6f);
    }
}

TEST_CASE("zero network without the global shortcut emits zeros") {
    ModelConfig cfg = tiny_config();
    cfg.use_global_residual = false;
    FginModel<float> m(cfg, 21);
    m.params.zero_values();
    m.new_graph();
    Tensor<float> x = random_tensor<float>({1, 6, 6, 4}, 22);
    Tensor<float> y = m.forward_tensor(x, true);
    for (float v : y.data) REQUIRE(v == 0.0f);
}

TEST_CASE("initialization is seed-deterministic") {
    ModelConfig cfg = tiny_config();
    FginModel<float> a(cfg, 23), b(cfg, 23), c(cfg, 24);
    REQUIRE(a.param_tensors()[0].data == b.param_tensors()[0].data);
    REQUIRE(a.param_tensors()[0].data != c.param_tensors()[0].data);
    // Biases start at zero, gammas at one.
    for (float v : a.params.get("shallow.b").value.data) REQUIRE(v == 0.0f);
    for (float v : a.params.get("incep0.b1.bn.gamma").value.data) REQUIRE(v == 1.0f);
}

TEST_CASE("inception block keeps width and the trace follows the equations") {
    ModelConfig cfg = tiny_config();
    FginModel<float> m(cfg, 25);
    Tensor<float> f = random_tensor<float>({1, 6, 6, 8}, 26);
    Var<float> fv = Var<float>::leaf(f, false);
    Tensor<float> y = m.inception_block(fv, 0, true).value();
    REQUIRE(y.shape == f.shape);
    for (float v : y.data) REQUIRE(v >= 0.0f);  // trailing relu

    // With zeroed parameters the block is relu(0 + x) = relu(x).
    FginModel<float> z(cfg, 27);
    z.params.zero_values();
    z.new_graph();
    Tensor<float> got = z.inception_block(fv, 1, true).value();
    Tensor<float> want = relu_forward(f);
    float worst = 0.0f;
    for (size_t i = 0; i < got.data.size(); ++i)
        worst = std::max(worst, std::abs(got.data[i] - want.data[i]));
    REQUIRE(worst <= 1e-6f);
}

TEST_CASE("multiscale fusion outputs F channels and no residual leak") {
    ModelConfig cfg = tiny_config();
    FginModel<float> m(cfg, 28);
    m.params.zero_values();
    m.new_graph();
    Tensor<float> f = random_tensor<float>({1, 6, 6, 8}, 29);
    Var<float> fv = Var<float>::leaf(f, false);
    Tensor<float> y = m.multiscale_fusion(fv).value();
    REQUIRE(y.shape == f.shape);
    for (float v : y.data) REQUIRE(v == 0.0f);  // no bypass path by design
}

TEST_CASE("config validation rejects malformed settings") {
    ModelConfig c = tiny_config();
    c.feature_width = 7;
    REQUIRE_THROWS_AS(c.validate(), data_error);

    c = tiny_config();
    c.scale = 3;
    REQUIRE_THROWS_AS(c.validate(), data_error);

    c = tiny_config();
    c.overlap = 4;  // == group_size
    REQUIRE_THROWS_AS(c.validate(), data_error);

    c = tiny_config();
    c.use_band_grouping = false;  // full_bands left unset
    REQUIRE_THROWS_AS(c.validate(), data_error);
}

TEST_CASE("config JSON round trip preserves every field") {
    ModelConfig c = tiny_config();
    c.use_spectral_fusion = false;
    c.upsampling = UpsamplingMode::kBilinearOnly;
    c.use_global_residual = false;
    nlohmann::json j = c;
    ModelConfig back = j.get<ModelConfig>();
    REQUIRE(back.group_size == c.group_size);
    REQUIRE(back.overlap == c.overlap);
    REQUIRE(back.feature_width == c.feature_width);
    REQUIRE(back.scale == c.scale);
    REQUIRE(back.use_spectral_fusion == false);
    REQUIRE(back.upsampling == UpsamplingMode::kBilinearOnly);
    REQUIRE(back.use_global_residual == false);
}

TEST_CASE("training-mode forward populates batchnorm running stats") {
    ModelConfig cfg = tiny_config();
    FginModel<float> m(cfg, 30);
    Tensor<float> x = random_tensor<float>({2, 6, 6, 4}, 31);
    REQUIRE_FALSE(m.stats("incep0.b1.bn").initialized);
    m.forward_tensor(x, true);
    REQUIRE(m.stats("incep0.b1.bn").initialized);

    // Inference mode now works and is batch-independent.
    m.new_graph();
    Tensor<float> y = m.forward_tensor(x, false);
    REQUIRE(y.shape == std::vector<int>{2, 12, 12, 4});
}

TEST_CASE("inference before any training batch is rejected") {
    FginModel<float> m(tiny_config(), 32);
    Tensor<float> x = random_tensor<float>({1, 6, 6, 4}, 33);
    REQUIRE_THROWS_AS(m.forward_tensor(x, false), data_error);
}
