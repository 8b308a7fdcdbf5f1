#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fgin/checkpoint.hpp"
#include "fgin/gradcheck.hpp"
#include "fgin/synthetic.hpp"
#include "fgin/train.hpp"

using namespace fgin;
namespace fs = std::filesystem;

namespace {

ModelConfig desk_model() {
    ModelConfig c;
    c.group_size = 4;
    c.overlap = 1;
    c.feature_width = 8;
    c.scale = 2;
    return c;
}

PatchSet desk_patches(uint64_t seed = 300) {
    Cube cube = synthetic_cube(48, 48, 6, seed);
    return extract_patches(cube, 2, TestAnchor::kTopLeft, 16, 0.25, 7);
}

std::string temp_file(const std::string& name) {
    return (fs::temp_directory_path() /
            ("fgin_train_" + std::to_string(static_cast<unsigned>(::getpid())) + "_" + name))
        .string();
}

std::vector<char> slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("l1 loss worked examples") {
    Tensor<double> p({1, 1, 2, 1});
    p.data = {1.0, 2.0};
    Tensor<double> t({1, 1, 2, 1});
    t.data = {1.5, 1.0};
    REQUIRE(l1_loss_forward(p, t) == Catch::Approx(0.75));  // (0.5 + 1.0) / 2

    // Gradient: sign(p - t) / n; the tie at zero contributes nothing.
    Tensor<double> tied({1, 1, 2, 1});
    tied.data = {1.5, 5.0};
    Var<double> pv = Var<double>::leaf(tied, true);
    Var<double> tv = Var<double>::leaf(t, false);
    Var<double> l = l1_loss(pv, tv);
    Tensor<double> one({1});
    one.data = {1.0};
    backward(l, one);
    REQUIRE(pv.grad().data[0] == 0.0);  // exact tie: sign(0) = 0
    REQUIRE(pv.grad().data[1] == 0.5);  // sign(4) / 2
}

TEST_CASE("desk-scale patch split sanity") {
    PatchSet set = desk_patches();
    REQUIRE(set.with_role(PatchRole::kTest).size() == 1);
    REQUIRE(set.with_role(PatchRole::kValidation).size() == 2);  // floor(0.25 * 8)
    REQUIRE(set.with_role(PatchRole::kTrain).size() == 6);
}

TEST_CASE("constant validation score stops after 1 + patience evaluations") {
    PatchSet set = desk_patches();
    // A batchnorm-free variant: with the learning rate at zero nothing at all
    // changes between epochs, so the validation score is exactly constant.
    ModelConfig mcfg = desk_model();
    mcfg.inception_blocks = 0;
    mcfg.upsampling = UpsamplingMode::kBilinearOnly;
    TrainConfig tcfg;
    tcfg.learning_rate = 0.0f;  // weights frozen -> identical score every epoch
    tcfg.max_epochs = 50;
    tcfg.patience = 1;
    tcfg.seed = 5;
    TrainResult res = train(set, mcfg, tcfg);
    // First evaluation always improves on -inf; the second shows no gain.
    REQUIRE(res.log.rows.size() == 2);
    REQUIRE(res.log.rows[0].is_best);
    REQUIRE_FALSE(res.log.rows[1].is_best);
    REQUIRE(res.log.best_epoch == 0);
    REQUIRE(res.log.stop_reason.find("early stopping") != std::string::npos);

    tcfg.patience = 3;
    REQUIRE(train(set, mcfg, tcfg).log.rows.size() == 4);
}

TEST_CASE("training is bit-identical across reruns") {
    PatchSet set = desk_patches();
    ModelConfig mcfg = desk_model();
    TrainConfig tcfg;
    tcfg.learning_rate = 1e-3f;
    tcfg.max_epochs = 3;
    tcfg.patience = 50;
    tcfg.seed = 6;
    TrainResult a = train(set, mcfg, tcfg);
    TrainResult b = train(set, mcfg, tcfg);
    REQUIRE(a.log.to_csv() == b.log.to_csv());
    auto at = a.model.param_tensors(), bt = b.model.param_tensors();
    for (size_t i = 0; i < at.size(); ++i) REQUIRE(at[i].data == bt[i].data);
}

TEST_CASE("training reduces the loss on a desk-scale problem") {
    PatchSet set = desk_patches();
    ModelConfig mcfg = desk_model();
    TrainConfig tcfg;
    tcfg.learning_rate = 1e-3f;
    tcfg.max_epochs = 8;
    tcfg.patience = 50;
    tcfg.min_delta = 0.0;
    tcfg.seed = 7;
    TrainResult res = train(set, mcfg, tcfg);
    REQUIRE(res.log.rows.size() == 8);
    REQUIRE(res.log.rows.back().train_loss < res.log.rows.front().train_loss);
    REQUIRE(res.log.best_epoch >= 0);
}

TEST_CASE("checkpoint save -> load -> save reproduces identical bytes") {
    PatchSet set = desk_patches();
    TrainConfig tcfg;
    tcfg.learning_rate = 1e-3f;
    tcfg.max_epochs = 2;
    tcfg.patience = 50;
    tcfg.seed = 8;
    TrainResult res = train(set, desk_model(), tcfg);

    const std::string p1 = temp_file("a.ckpt"), p2 = temp_file("b.ckpt");
    save_checkpoint(res.state, p1);
    TrainState loaded = load_checkpoint(p1);
    save_checkpoint(loaded, p2);
    REQUIRE(slurp(p1) == slurp(p2));

    // The reloaded model predicts bitwise identically.
    const Patch* test = set.with_role(PatchRole::kTest)[0];
    Tensor<float> want = predict_patch(res.state.model, test->lr);
    Tensor<float> got = predict_patch(loaded.model, test->lr);
    REQUIRE(got.data == want.data);

    fs::remove(p1);
    fs::remove(p2);
}

TEST_CASE("checkpoint rejects corruption") {
    PatchSet set = desk_patches();
    TrainConfig tcfg;
    tcfg.max_epochs = 1;
    tcfg.patience = 50;
    TrainResult res = train(set, desk_model(), tcfg);
    const std::string path = temp_file("c.ckpt");
    save_checkpoint(res.state, path);

    // Flip the magic.
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXXXXXX", 8);
    }
    REQUIRE_THROWS_WITH(load_checkpoint(path), Catch::Matchers::ContainsSubstring("magic"));

    save_checkpoint(res.state, path);
    const auto full = static_cast<uint64_t>(fs::file_size(path));
    fs::resize_file(path, full - 64);  // drop the tail of the payload
    REQUIRE_THROWS_AS(load_checkpoint(path), data_error);
    fs::remove(path);
    REQUIRE_THROWS_AS(load_checkpoint(path), data_error);
}

TEST_CASE("a resumed run replays the uninterrupted one bit for bit") {
    PatchSet set = desk_patches();
    ModelConfig mcfg = desk_model();
    TrainConfig tcfg;
    tcfg.learning_rate = 1e-3f;
    tcfg.patience = 50;
    tcfg.seed = 9;

    tcfg.max_epochs = 4;
    TrainResult full = train(set, mcfg, tcfg);

    tcfg.max_epochs = 2;
    TrainResult half = train(set, mcfg, tcfg);
    const std::string path = temp_file("resume.ckpt");
    save_checkpoint(half.state, path);
    TrainState restored = load_checkpoint(path);
    fs::remove(path);

    tcfg.max_epochs = 4;
    TrainResult resumed = train(set, mcfg, tcfg, &restored);
    REQUIRE(resumed.state.adam_steps == full.state.adam_steps);
    auto at = full.state.model.param_tensors(), bt = resumed.state.model.param_tensors();
    for (size_t i = 0; i < at.size(); ++i) REQUIRE(at[i].data == bt[i].data);
    REQUIRE(resumed.state.best_val_mpsnr == full.state.best_val_mpsnr);
}

TEST_CASE("divergent training returns instead of looping") {
    PatchSet set = desk_patches();
    ModelConfig mcfg = desk_model();
    TrainConfig tcfg;
    tcfg.learning_rate = 1e18f;  // guaranteed overflow within a few steps
    tcfg.use_mse_loss = true;
    tcfg.max_epochs = 50;
    tcfg.patience = 50;
    TrainResult res = train(set, mcfg, tcfg);
    REQUIRE(res.log.stop_reason.find("diverged") != std::string::npos);
}

TEST_CASE("evaluate emits one report per test patch plus the aggregate") {
    PatchSet set = desk_patches();
    TrainConfig tcfg;
    tcfg.max_epochs = 1;
    tcfg.patience = 50;
    TrainResult res = train(set, desk_model(), tcfg);
    auto reports = evaluate(res.model, set);
    REQUIRE(reports.size() == 2);  // one test patch + aggregate
    REQUIRE(reports[0].mpsnr == Catch::Approx(reports[1].mpsnr));
    REQUIRE(reports[0].per_band_psnr.size() == 6);
    REQUIRE(std::isfinite(reports[0].sam_degrees));
}

TEST_CASE("training log csv carries the trailer with the stop reason") {
    TrainLog log;
    TrainLogRow r;
    r.epoch = 0;
    r.train_loss = 0.125;
    r.evaluated = true;
    r.val_mpsnr = 31.5;
    r.is_best = true;
    log.rows.push_back(r);
    log.best_epoch = 0;
    log.best_val_mpsnr = 31.5;
    log.stop_reason = "max epochs reached";
    const std::string csv = log.to_csv();
    REQUIRE(csv.find("epoch,train_loss,evaluated,val_mpsnr") == 0);
    REQUIRE(csv.find("0,0.125,1,31.5") != std::string::npos);
    REQUIRE(csv.find("# best_epoch=0") != std::string::npos);
    REQUIRE(csv.find("stop=max epochs reached") != std::string::npos);
}

TEST_CASE("train validates mismatched full_bands") {
    PatchSet set = desk_patches();
    ModelConfig mcfg = desk_model();
    mcfg.use_band_grouping = false;
    mcfg.full_bands = 5;  // patches have 6 bands
    TrainConfig tcfg;
    tcfg.max_epochs = 1;
    REQUIRE_THROWS_AS(train(set, mcfg, tcfg), data_error);
}
