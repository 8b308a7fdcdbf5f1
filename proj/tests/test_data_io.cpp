#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fgin/cube.hpp"
#include "fgin/gradcheck.hpp"
#include "fgin/patches.hpp"
#include "fgin/png.hpp"
#include "fgin/synthetic.hpp"

using namespace fgin;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() /
              ("fgin_io_" + std::to_string(static_cast<unsigned>(::getpid())) + "_" +
               std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
    static int& counter() {
        static int n = 0;
        return n;
    }
};

}  // namespace

TEST_CASE("cube write/read round trip is bitwise exact") {
    TempDir tmp;
    Cube c;
    c.values = random_tensor<float>({7, 5, 6}, 101, 0.0f, 1.0f);
    c.norm = {12.5, 4087.0};
    write_cube(c, tmp.path("a.cube"));
    Cube back = read_cube(tmp.path("a.cube"));
    REQUIRE(back.values.shape == c.values.shape);
    REQUIRE(back.values.data == c.values.data);
    REQUIRE(back.norm.global_min == 12.5);
    REQUIRE(back.norm.global_max == 4087.0);
}

TEST_CASE("truncated payload is reported with expected byte counts") {
    TempDir tmp;
    Cube c;
    c.values = random_tensor<float>({4, 4, 3}, 102, 0.0f, 1.0f);
    write_cube(c, tmp.path("b.cube"));
    fs::resize_file(tmp.path("b.cube"), 100);  // 4*4*3*4 = 192 expected
    REQUIRE_THROWS_WITH(read_cube(tmp.path("b.cube")),
                        Catch::Matchers::ContainsSubstring("192") &&
                            Catch::Matchers::ContainsSubstring("100"));
}

TEST_CASE("header/payload dimension mismatch is a data error") {
    TempDir tmp;
    Cube c;
    c.values = random_tensor<float>({4, 4, 3}, 103, 0.0f, 1.0f);
    write_cube(c, tmp.path("c.cube"));
    // Rewrite the header claiming one extra band.
    nlohmann::json hdr;
    {
        std::ifstream hf(tmp.path("c.cube") + ".json");
        hf >> hdr;
    }
    hdr["bands"] = 4;
    std::ofstream(tmp.path("c.cube") + ".json") << hdr.dump();
    REQUIRE_THROWS_AS(read_cube(tmp.path("c.cube")), data_error);
}

TEST_CASE("missing header field and unknown dtype are rejected") {
    TempDir tmp;
    Cube c;
    c.values = random_tensor<float>({2, 2, 2}, 104, 0.0f, 1.0f);
    write_cube(c, tmp.path("d.cube"));
    nlohmann::json hdr;
    {
        std::ifstream hf(tmp.path("d.cube") + ".json");
        hf >> hdr;
    }
    nlohmann::json broken = hdr;
    broken.erase("bands");
    std::ofstream(tmp.path("d.cube") + ".json") << broken.dump();
    REQUIRE_THROWS_WITH(read_cube(tmp.path("d.cube")),
                        Catch::Matchers::ContainsSubstring("bands"));

    broken = hdr;
    broken["dtype"] = "f64";
    std::ofstream(tmp.path("d.cube") + ".json") << broken.dump();
    REQUIRE_THROWS_AS(read_cube(tmp.path("d.cube")), data_error);
}

TEST_CASE("normalize maps to [0,1] and denormalize inverts it") {
    Tensor<float> raw({2, 2, 2});
    raw.data = {10.f, 30.f, 20.f, 50.f, 40.f, 25.f, 15.f, 35.f};
    Cube c = normalize(raw);
    REQUIRE(c.norm.global_min == 10.0);
    REQUIRE(c.norm.global_max == 50.0);
    REQUIRE(c.values.data[0] == 0.0f);
    REQUIRE(c.values.data[3] == 1.0f);
    REQUIRE(c.values.data[1] == 0.5f);
    Tensor<float> back = denormalize(c);
    for (size_t i = 0; i < raw.data.size(); ++i)
        REQUIRE(back.data[i] == Catch::Approx(raw.data[i]).margin(1e-4));
}

TEST_CASE("normalize rejects a constant cube and non-finite values") {
    REQUIRE_THROWS_AS(normalize(Tensor<float>::full({2, 2, 2}, 3.0f)), data_error);
    Tensor<float> bad = random_tensor<float>({2, 2, 2}, 105);
    bad.data[3] = std::numeric_limits<float>::quiet_NaN();
    REQUIRE_THROWS_AS(normalize(bad), error);
}

TEST_CASE("raw ingestion: bsq and bip layouts agree after deinterleave") {
    TempDir tmp;
    const int H = 3, W = 2, C = 2;
    Tensor<float> t = random_tensor<float>({H, W, C}, 106);
    // bip file: exactly the row-major [H,W,C] buffer.
    {
        std::ofstream f(tmp.path("x.bip"), std::ios::binary);
        f.write(reinterpret_cast<const char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * 4));
    }
    // bsq file: one full plane per band.
    {
        std::vector<float> bsq(t.data.size());
        for (int b = 0; b < C; ++b)
            for (int i = 0; i < H; ++i)
                for (int j = 0; j < W; ++j)
                    bsq[(static_cast<size_t>(b) * H + i) * W + j] =
                        t.data[(static_cast<size_t>(i) * W + j) * C + b];
        std::ofstream f(tmp.path("x.bsq"), std::ios::binary);
        f.write(reinterpret_cast<const char*>(bsq.data()),
                static_cast<std::streamsize>(bsq.size() * 4));
    }
    REQUIRE(read_raw_floats(tmp.path("x.bip"), H, W, C, "bip").data == t.data);
    REQUIRE(read_raw_floats(tmp.path("x.bsq"), H, W, C, "bsq").data == t.data);
    REQUIRE_THROWS_AS(read_raw_floats(tmp.path("x.bip"), H, W, C, "bil"), data_error);
    REQUIRE_THROWS_AS(read_raw_floats(tmp.path("x.bip"), H + 1, W, C, "bip"), data_error);
}

TEST_CASE("degradation is the block mean and composes across scales") {
    Tensor<float> hr({2, 2, 1});
    hr.data = {1.f, 2.f, 3.f, 5.f};
    Tensor<float> lr = degrade(hr, 2);
    REQUIRE(lr.shape == std::vector<int>{1, 1, 1});
    REQUIRE(lr.data[0] == 2.75f);

    // 4x decimation equals two 2x decimations.
    Tensor<float> big = random_tensor<float>({8, 8, 3}, 107, 0.0f, 1.0f);
    Tensor<float> once = degrade(big, 4);
    Tensor<float> twice = degrade(degrade(big, 2), 2);
    for (size_t i = 0; i < once.data.size(); ++i)
        REQUIRE(once.data[i] == Catch::Approx(twice.data[i]).margin(1e-6));

    Tensor<float> odd = random_tensor<float>({6, 6, 1}, 108);
    REQUIRE_THROWS_AS(degrade(odd, 4), shape_error);
}

TEST_CASE("patch protocol: 288x288 cube, top-left anchor") {
    Cube cube;
    cube.values = synthetic_cube(288, 288, 5, 109).values;
    PatchSet set = extract_patches(cube, 2, TestAnchor::kTopLeft, 144, 0.1, 7);

    auto test = set.with_role(PatchRole::kTest);
    auto val = set.with_role(PatchRole::kValidation);
    auto train = set.with_role(PatchRole::kTrain);
    REQUIRE(test.size() == 1);
    REQUIRE(test[0]->row == 0);
    REQUIRE(test[0]->col == 0);
    // Three remaining grid tiles; floor(0.1 * 3) = 0 go to validation.
    REQUIRE(val.empty());
    REQUIRE(train.size() == 3);
    std::vector<std::pair<int, int>> got;
    for (const auto* p : train) got.emplace_back(p->row, p->col);
    std::sort(got.begin(), got.end());
    REQUIRE(got == std::vector<std::pair<int, int>>{{0, 144}, {144, 0}, {144, 144}});
}

TEST_CASE("patch protocol: bottom-center anchor and disjointness") {
    Cube cube;
    cube.values = synthetic_cube(300, 310, 4, 110).values;
    PatchSet set = extract_patches(cube, 2, TestAnchor::kBottomCenter, 144, 0.25, 7);
    auto test = set.with_role(PatchRole::kTest);
    REQUIRE(test.size() == 1);
    REQUIRE(test[0]->row == 300 - 144);
    REQUIRE(test[0]->col == (310 - 144) / 2);

    // No training or validation tile may intersect the test rectangle.
    const int tr = test[0]->row, tc = test[0]->col, p = 144;
    for (const auto& patch : set.patches) {
        if (patch.role == PatchRole::kTest) continue;
        const bool overlap = patch.row < tr + p && patch.row + p > tr && patch.col < tc + p &&
                             patch.col + p > tc;
        REQUIRE_FALSE(overlap);
    }
}

TEST_CASE("every patch's lr plane is exactly the degraded hr plane") {
    Cube cube;
    cube.values = synthetic_cube(288, 288, 6, 111).values;
    for (int scale : {2, 4}) {
        PatchSet set = extract_patches(cube, scale, TestAnchor::kTopLeft, 144, 0.1, 7);
        for (const auto& p : set.patches) {
            Tensor<float> want = degrade(p.hr, scale);
            REQUIRE(p.lr.shape == want.shape);
            REQUIRE(p.lr.data == want.data);
            // hr crops come straight from the cube, bitwise.
            for (int i = 0; i < 5; ++i)
                REQUIRE(p.hr.data[static_cast<size_t>(i)] ==
                        cube.values.data[(static_cast<size_t>(p.row) * 288 + p.col) * 6 +
                                         static_cast<size_t>(i)]);
        }
    }
}

TEST_CASE("patch extraction validates its inputs") {
    Cube small;
    small.values = synthetic_cube(100, 100, 3, 112).values;
    REQUIRE_THROWS_AS(extract_patches(small, 2, TestAnchor::kTopLeft, 144), data_error);
    Cube ok;
    ok.values = synthetic_cube(288, 288, 3, 113).values;
    REQUIRE_THROWS_AS(extract_patches(ok, 3, TestAnchor::kTopLeft, 144), data_error);
    REQUIRE_THROWS_AS(extract_patches(ok, 4, TestAnchor::kTopLeft, 142), data_error);
}

TEST_CASE("patch holdout is seed-deterministic") {
    Cube cube;
    cube.values = synthetic_cube(432, 432, 3, 114).values;
    PatchSet a = extract_patches(cube, 2, TestAnchor::kTopLeft, 144, 0.3, 5);
    PatchSet b = extract_patches(cube, 2, TestAnchor::kTopLeft, 144, 0.3, 5);
    REQUIRE(a.patches.size() == b.patches.size());
    REQUIRE(a.with_role(PatchRole::kValidation).size() == 2);  // floor(0.3 * 8)
    for (size_t i = 0; i < a.patches.size(); ++i) {
        REQUIRE(a.patches[i].row == b.patches[i].row);
        REQUIRE(a.patches[i].col == b.patches[i].col);
        REQUIRE(a.patches[i].role == b.patches[i].role);
    }
}

TEST_CASE("png quantization hits the exact endpoints and midpoint") {
    REQUIRE(quantize8(0.0f) == 0);
    REQUIRE(quantize8(1.0f) == 255);
    REQUIRE(quantize8(0.5f) == 128);  // round half up: 127.5 + 0.5
    REQUIRE(quantize8(-0.2f) == 0);
    REQUIRE(quantize8(1.7f) == 255);
}

TEST_CASE("png export writes a decodable signature and rejects bad bands") {
    TempDir tmp;
    Cube cube;
    cube.values = synthetic_cube(16, 16, 4, 115).values;
    export_band_png(cube, {0}, tmp.path("g.png"));
    export_band_png(cube, {0, 1, 3}, tmp.path("rgb.png"));
    std::ifstream f(tmp.path("g.png"), std::ios::binary);
    uint8_t sig[8];
    f.read(reinterpret_cast<char*>(sig), 8);
    const uint8_t want[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    REQUIRE(std::equal(sig, sig + 8, want));
    REQUIRE_THROWS_AS(export_band_png(cube, {0, 1}, tmp.path("x.png")), data_error);
    REQUIRE_THROWS_AS(export_band_png(cube, {9}, tmp.path("x.png")), data_error);
}

TEST_CASE("synthetic cubes are normalized, finite and seed-deterministic") {
    Cube a = synthetic_cube(32, 40, 8, 116);
    Cube b = synthetic_cube(32, 40, 8, 116);
    Cube c = synthetic_cube(32, 40, 8, 117);
    REQUIRE(a.values.shape == std::vector<int>{32, 40, 8});
    REQUIRE(a.values.data == b.values.data);
    REQUIRE(a.values.data != c.values.data);
    float lo = 1e9f, hi = -1e9f;
    for (float v : a.values.data) {
        REQUIRE(std::isfinite(v));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    REQUIRE(lo == 0.0f);
    REQUIRE(hi == 1.0f);
}
