// fgin — hyperspectral single-image super-resolution toolkit.
//
// Subcommands: ingest, train, eval, sr, gradcheck, inspect.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fgin/checkpoint.hpp"
#include "fgin/cube.hpp"
#include "fgin/gradcheck_suite.hpp"
#include "fgin/metrics.hpp"
#include "fgin/model.hpp"
#include "fgin/patches.hpp"
#include "fgin/png.hpp"
#include "fgin/sr.hpp"
#include "fgin/synthetic.hpp"
#include "fgin/train.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "fgin 1.0.0";

uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw fgin::data_error("cannot open " + path + " for digest");
    uint64_t h = 1469598103934665603ULL;
    char buf[65536];
    while (f.read(buf, sizeof buf) || f.gcount() > 0) {
        for (std::streamsize i = 0; i < f.gcount(); ++i) {
            h ^= static_cast<uint8_t>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!f) break;
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Flat key=value config file mirroring ModelConfig/TrainConfig field names.
// Lines starting with '#' are comments. Flags given on the command line
// override file values.
std::map<std::string, std::string> read_kv_config(const std::string& path) {
    std::map<std::string, std::string> kv;
    std::ifstream f(path);
    if (!f) throw fgin::data_error("cannot open config file " + path);
    std::string line;
    while (std::getline(f, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

void apply_kv(const std::map<std::string, std::string>& kv, fgin::ModelConfig& m,
              fgin::TrainConfig& t) {
    auto geti = [&](const char* k, int& dst) {
        if (kv.count(k)) dst = std::stoi(kv.at(k));
    };
    auto getb = [&](const char* k, bool& dst) {
        if (kv.count(k)) dst = kv.at(k) == "true" || kv.at(k) == "1";
    };
    geti("group_size", m.group_size);
    geti("overlap", m.overlap);
    geti("feature_width", m.feature_width);
    geti("inception_blocks", m.inception_blocks);
    geti("scale", m.scale);
    getb("use_band_grouping", m.use_band_grouping);
    getb("use_spectral_fusion", m.use_spectral_fusion);
    getb("use_global_residual", m.use_global_residual);
    if (kv.count("upsampling"))
        m.upsampling = kv.at("upsampling") == "bilinear" ? fgin::UpsamplingMode::kBilinearOnly
                                                         : fgin::UpsamplingMode::kOptimized;
    geti("batch_size", t.batch_size);
    if (kv.count("learning_rate")) t.learning_rate = std::stof(kv.at("learning_rate"));
    geti("max_epochs", t.max_epochs);
    geti("patience", t.patience);
    if (kv.count("min_delta")) t.min_delta = std::stod(kv.at("min_delta"));
    if (kv.count("seed")) t.seed = std::stoull(kv.at("seed"));
    geti("eval_every", t.eval_every);
    getb("use_mse_loss", t.use_mse_loss);
}

void write_manifest(const fs::path& out_dir, const fgin::ModelConfig& mcfg,
                    const fgin::TrainConfig& tcfg, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["tool_version"] = kToolVersion;
    j["command"] = command;
    j["model_config"] = mcfg;
    j["train_config"] = {{"batch_size", tcfg.batch_size},
                         {"learning_rate", tcfg.learning_rate},
                         {"max_epochs", tcfg.max_epochs},
                         {"patience", tcfg.patience},
                         {"min_delta", tcfg.min_delta},
                         {"seed", tcfg.seed},
                         {"eval_every", tcfg.eval_every},
                         {"use_mse_loss", tcfg.use_mse_loss}};
    nlohmann::json ins = nlohmann::json::array();
    for (const auto& [path, digest] : inputs)
        ins.push_back({{"path", path}, {"fnv1a64", digest}});
    j["inputs"] = ins;
    j["outputs"] = outputs;
    std::ofstream f(out_dir / "manifest.json");
    f << j.dump(2) << '\n';
}

std::string metrics_csv_header() {
    return "patch,mpsnr_db,mssim,sam_deg,wall_time_s\n";
}

std::string metrics_csv_row(const std::string& label, const fgin::MetricsReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f\n", label.c_str(), r.mpsnr, r.mssim,
                  r.sam_degrees, r.wall_time_seconds);
    return buf;
}

int run(int argc, char** argv) {
    CLI::App app{"FGIN hyperspectral single-image super-resolution toolkit"};
    app.require_subcommand(1);

    // --- ingest ---
    auto* ingest = app.add_subcommand("ingest", "convert raw floats into the cube format");
    std::string in_raw, in_layout, ingest_out, interleave = "bsq";
    ingest->add_option("--input", in_raw, "raw float32 file")->required();
    ingest->add_option("--layout", in_layout, "H,W,C")->required();
    ingest->add_option("--interleave", interleave, "bsq or bip (default bsq)");
    ingest->add_option("--output", ingest_out, "output cube path")->required();

    // --- synth ---
    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic cube");
    int sy_h = 192, sy_w = 192, sy_c = 8;
    uint64_t sy_seed = 7;
    std::string synth_out;
    synth->add_option("--height", sy_h);
    synth->add_option("--width", sy_w);
    synth->add_option("--bands", sy_c);
    synth->add_option("--seed", sy_seed);
    synth->add_option("--output", synth_out)->required();

    // --- train ---
    auto* train_cmd = app.add_subcommand("train", "train a model on a cube");
    std::string tr_cube, tr_config, tr_out, tr_anchor = "top-left", tr_upsampling = "optimized";
    int tr_scale = 4, tr_patch = 144;
    bool no_band_grouping = false, no_spectral_fusion = false, no_global_residual = false;
    fgin::ModelConfig mcfg;
    fgin::TrainConfig tcfg;
    train_cmd->add_option("--cube", tr_cube)->required();
    train_cmd->add_option("--scale", tr_scale, "2, 4 or 8")->required();
    train_cmd->add_option("--config", tr_config, "flat key=value config file");
    train_cmd->add_option("--out", tr_out, "output directory")->required();
    auto* gs_opt = train_cmd->add_option("--group-size", mcfg.group_size, "16, 32 or 48");
    train_cmd->add_option("--overlap", mcfg.overlap);
    train_cmd->add_option("--feature-width", mcfg.feature_width);
    train_cmd->add_flag("--no-band-grouping", no_band_grouping);
    train_cmd->add_flag("--no-spectral-fusion", no_spectral_fusion);
    train_cmd->add_flag("--no-global-residual", no_global_residual);
    train_cmd->add_option("--upsampling", tr_upsampling, "optimized or bilinear");
    train_cmd->add_option("--patch-size", tr_patch);
    train_cmd->add_option("--test-anchor", tr_anchor, "top-left or bottom-center");
    train_cmd->add_option("--epochs", tcfg.max_epochs);
    train_cmd->add_option("--batch-size", tcfg.batch_size);
    train_cmd->add_option("--lr", tcfg.learning_rate);
    train_cmd->add_option("--seed", tcfg.seed);
    train_cmd->add_option("--patience", tcfg.patience);
    train_cmd->add_option("--eval-every", tcfg.eval_every);
    std::string tr_resume;
    train_cmd->add_option("--resume", tr_resume, "checkpoint to resume from");
    bool tr_verbose = false;
    train_cmd->add_flag("--verbose", tr_verbose);

    // --- eval ---
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a cube's test patch");
    std::string ev_cube, ev_ckpt, ev_out, ev_anchor = "top-left";
    int ev_scale = 0, ev_patch = 144;
    bool ev_png = false;
    eval_cmd->add_option("--cube", ev_cube)->required();
    eval_cmd->add_option("--checkpoint", ev_ckpt)->required();
    eval_cmd->add_option("--scale", ev_scale, "defaults to the checkpoint's scale");
    eval_cmd->add_option("--out", ev_out)->required();
    eval_cmd->add_option("--patch-size", ev_patch);
    eval_cmd->add_option("--test-anchor", ev_anchor);
    eval_cmd->add_flag("--png", ev_png, "export ground truth / bilinear / FGIN band PNGs");

    // --- sr ---
    auto* sr_cmd = app.add_subcommand("sr", "super-resolve a full cube");
    std::string sr_in, sr_ckpt, sr_out;
    int sr_tile = 0;
    sr_cmd->add_option("--cube", sr_in)->required();
    sr_cmd->add_option("--checkpoint", sr_ckpt)->required();
    sr_cmd->add_option("--output", sr_out)->required();
    sr_cmd->add_option("--tile", sr_tile, "input tile size (default 144/scale)");

    // --- gradcheck ---
    auto* gc_cmd = app.add_subcommand("gradcheck", "run the gradient oracle suite");
    int gc_probes = 64;
    gc_cmd->add_option("--probes", gc_probes);

    // --- inspect ---
    auto* ins_cmd = app.add_subcommand("inspect", "report a model's parameter census");
    std::string ins_ckpt, ins_config;
    ins_cmd->add_option("--checkpoint", ins_ckpt);
    ins_cmd->add_option("--config", ins_config, "flat key=value config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // any malformed invocation is a usage error
    }

    if (*ingest) {
        int H, W, C;
        char c1, c2;
        std::istringstream ls(in_layout);
        if (!(ls >> H >> c1 >> W >> c2 >> C) || c1 != ',' || c2 != ',')
            throw CLI::ValidationError("--layout", "expected H,W,C");
        fgin::Tensor<float> raw = fgin::read_raw_floats(in_raw, H, W, C, interleave);
        fgin::Cube cube = fgin::normalize(raw);
        fgin::write_cube(cube, ingest_out);
        std::cout << "wrote " << ingest_out << " (" << H << "x" << W << "x" << C
                  << ", min=" << cube.norm.global_min << " max=" << cube.norm.global_max
                  << ")\n";
        return 0;
    }

    if (*synth) {
        fgin::Cube cube = fgin::synthetic_cube(sy_h, sy_w, sy_c, sy_seed);
        fgin::write_cube(cube, synth_out);
        std::cout << "wrote synthetic cube " << synth_out << '\n';
        return 0;
    }

    if (*train_cmd) {
        if (no_band_grouping && gs_opt->count() > 0)
            throw CLI::ValidationError("--group-size",
                                       "cannot be combined with --no-band-grouping");
        if (tr_scale != 2 && tr_scale != 4 && tr_scale != 8)
            throw CLI::ValidationError("--scale", "must be 2, 4 or 8");
        if (!tr_config.empty()) apply_kv(read_kv_config(tr_config), mcfg, tcfg);
        // Flags override config-file values.
        mcfg.scale = tr_scale;
        if (no_band_grouping) mcfg.use_band_grouping = false;
        if (no_spectral_fusion) mcfg.use_spectral_fusion = false;
        if (no_global_residual) mcfg.use_global_residual = false;
        if (tr_upsampling == "bilinear") mcfg.upsampling = fgin::UpsamplingMode::kBilinearOnly;
        else if (tr_upsampling != "optimized")
            throw CLI::ValidationError("--upsampling", "must be optimized or bilinear");
        tcfg.verbose = tr_verbose;

        fgin::Cube cube = fgin::read_cube(tr_cube);
        if (!mcfg.use_band_grouping) mcfg.full_bands = cube.bands();
        mcfg.validate();

        fs::create_directories(tr_out);
        const auto anchor = tr_anchor == "bottom-center" ? fgin::TestAnchor::kBottomCenter
                                                         : fgin::TestAnchor::kTopLeft;
        const std::string ckpt_path = (fs::path(tr_out) / "model.ckpt").string();
        const std::string log_path = (fs::path(tr_out) / "trainlog.csv").string();
        write_manifest(tr_out, mcfg, tcfg, "train",
                       {{tr_cube, hex64(fnv1a64_file(tr_cube))}}, {ckpt_path, log_path});

        fgin::PatchSet patches =
            fgin::extract_patches(cube, tr_scale, anchor, tr_patch, 0.1, tcfg.seed);
        std::cout << "parameters: " << fgin::param_count(mcfg) << "\n";

        fgin::TrainState* resume_ptr = nullptr;
        fgin::TrainState resumed;
        if (!tr_resume.empty()) {
            resumed = fgin::load_checkpoint(tr_resume);
            resume_ptr = &resumed;
        }
        fgin::TrainResult res = fgin::train(patches, mcfg, tcfg, resume_ptr);
        if (res.log.stop_reason.rfind("diverged", 0) == 0) {
            std::ofstream(log_path) << res.log.to_csv();
            fgin::save_checkpoint(res.state, ckpt_path);
            std::cerr << "training diverged; last finite checkpoint written\n";
            return 3;
        }
        std::ofstream(log_path) << res.log.to_csv();
        fgin::save_checkpoint(res.state, ckpt_path);
        std::cout << res.log.stop_reason << "; best epoch " << res.log.best_epoch
                  << " (val MPSNR " << res.log.best_val_mpsnr << " dB)\n"
                  << "checkpoint: " << ckpt_path << "\n";
        return 0;
    }

    if (*eval_cmd) {
        fgin::TrainState st = fgin::load_checkpoint(ev_ckpt);
        fgin::FginModel<float>& model = st.best_epoch >= 0 ? st.best_model : st.model;
        if (ev_scale == 0) ev_scale = model.cfg.scale;
        if (ev_scale != model.cfg.scale)
            throw fgin::data_error("checkpoint was trained at scale " +
                                   std::to_string(model.cfg.scale) + ", requested " +
                                   std::to_string(ev_scale));
        fgin::Cube cube = fgin::read_cube(ev_cube);
        if (!model.cfg.use_band_grouping && model.cfg.full_bands != cube.bands())
            throw fgin::data_error("checkpoint expects " +
                                   std::to_string(model.cfg.full_bands) + " bands, cube has " +
                                   std::to_string(cube.bands()));
        const auto anchor = ev_anchor == "bottom-center" ? fgin::TestAnchor::kBottomCenter
                                                         : fgin::TestAnchor::kTopLeft;
        fgin::PatchSet patches = fgin::extract_patches(cube, ev_scale, anchor, ev_patch);
        fs::create_directories(ev_out);

        std::string csv = metrics_csv_header();
        std::string band_csv = "band,psnr_db\n";
        auto tests = patches.with_role(fgin::PatchRole::kTest);
        fgin::MetricsReport fgin_agg;
        int idx = 0;
        for (const auto* p : tests) {
            fgin::Tensor<float> pred = fgin::predict_patch(model, p->lr);
            fgin::MetricsReport r = fgin::compute_metrics(pred, p->hr);
            csv += metrics_csv_row("fgin_" + std::to_string(idx), r);
            // Bilinear baseline row is always present for comparison.
            fgin::Tensor<float> lr4 = p->lr;
            lr4.shape = {1, p->lr.dim(0), p->lr.dim(1), p->lr.dim(2)};
            fgin::Tensor<float> bl = fgin::bilinear_forward(lr4, ev_scale);
            bl.shape = {p->hr.dim(0), p->hr.dim(1), p->hr.dim(2)};
            csv += metrics_csv_row("bilinear_" + std::to_string(idx),
                                   fgin::compute_metrics(bl, p->hr));
            for (size_t b = 0; b < r.per_band_psnr.size(); ++b)
                band_csv += std::to_string(b) + "," + std::to_string(r.per_band_psnr[b]) + "\n";
            if (ev_png) {
                const int mid = cube.bands() / 2;
                fgin::Cube tmp;
                tmp.norm = cube.norm;
                tmp.values = p->hr;
                fgin::export_band_png(tmp, {mid},
                                      (fs::path(ev_out) / ("gt_" + std::to_string(idx) + ".png"))
                                          .string());
                tmp.values = bl;
                fgin::export_band_png(
                    tmp, {mid},
                    (fs::path(ev_out) / ("bilinear_" + std::to_string(idx) + ".png")).string());
                tmp.values = pred;
                fgin::export_band_png(
                    tmp, {mid},
                    (fs::path(ev_out) / ("fgin_" + std::to_string(idx) + ".png")).string());
            }
            fgin_agg.mpsnr += r.mpsnr;
            fgin_agg.mssim += r.mssim;
            fgin_agg.sam_degrees += r.sam_degrees;
            ++idx;
        }
        fgin_agg.mpsnr /= idx;
        fgin_agg.mssim /= idx;
        fgin_agg.sam_degrees /= idx;
        csv += metrics_csv_row("aggregate", fgin_agg);
        std::ofstream(fs::path(ev_out) / "metrics.csv") << csv;
        std::ofstream(fs::path(ev_out) / "per_band_psnr.csv") << band_csv;
        std::ofstream(fs::path(ev_out) / "metrics.txt") << fgin::metrics_kv(fgin_agg);
        std::cout << fgin::metrics_kv(fgin_agg);
        return 0;
    }

    if (*sr_cmd) {
        fgin::TrainState st = fgin::load_checkpoint(sr_ckpt);
        fgin::FginModel<float>& model = st.best_epoch >= 0 ? st.best_model : st.model;
        fgin::Cube cube = fgin::read_cube(sr_in);
        if (!model.cfg.use_band_grouping && model.cfg.full_bands != cube.bands())
            throw fgin::data_error("checkpoint expects " +
                                   std::to_string(model.cfg.full_bands) + " bands, cube has " +
                                   std::to_string(cube.bands()));
        fgin::Cube out;
        out.norm = cube.norm;
        out.values = fgin::super_resolve(model, cube.values, sr_tile);
        fgin::write_cube(out, sr_out);
        std::cout << "wrote " << sr_out << " (" << out.height() << "x" << out.width() << "x"
                  << out.bands() << ")\n";
        return 0;
    }

    if (*gc_cmd) {
        auto rows = fgin::run_gradcheck_suite(gc_probes);
        bool ok = true;
        for (const auto& r : rows) {
            std::printf("%-28s max_rel_err=%.3e tol=%.0e %s\n", r.op.c_str(), r.max_rel_error,
                        r.tolerance, r.pass() ? "PASS" : "FAIL");
            ok = ok && r.pass();
        }
        if (!ok) {
            std::cerr << "gradient check failed\n";
            return 3;
        }
        return 0;
    }

    if (*ins_cmd) {
        fgin::ModelConfig cfg;
        if (!ins_ckpt.empty()) {
            cfg = fgin::load_checkpoint(ins_ckpt).model.cfg;
        } else if (!ins_config.empty()) {
            fgin::TrainConfig dummy;
            apply_kv(read_kv_config(ins_config), cfg, dummy);
        } else {
            throw CLI::ValidationError("inspect", "need --checkpoint or --config");
        }
        nlohmann::json j = cfg;
        std::cout << j.dump(2) << "\ntrainable parameters: " << fgin::param_count(cfg) << '\n';
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << '\n';
        return 1;
    } catch (const fgin::numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const fgin::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
