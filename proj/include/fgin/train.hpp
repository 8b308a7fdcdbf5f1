#pragma once

#include <chrono>
#include <cstdio>
#include <iostream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "fgin/bands.hpp"
#include "fgin/metrics.hpp"
#include "fgin/model.hpp"
#include "fgin/patches.hpp"

namespace fgin {

struct TrainConfig {
    int batch_size = 4;
    float learning_rate = 1e-4f;
    int max_epochs = 500;
    int patience = 20;       // evaluations without improvement before stopping
    double min_delta = 0.01; // dB of validation MPSNR counted as improvement
    uint64_t seed = 42;
    int eval_every = 1;
    bool use_mse_loss = false;
    bool verbose = false;

    void validate() const {
        if (batch_size < 1) throw data_error("batch_size must be >= 1");
        if (patience < 1) throw data_error("patience must be >= 1");
        if (max_epochs < 1) throw data_error("max_epochs must be >= 1");
        if (eval_every < 1) throw data_error("eval_every must be >= 1");
    }
};

struct TrainLogRow {
    int epoch = 0;
    double train_loss = 0.0;
    bool evaluated = false;
    double val_mpsnr = 0.0;
    double val_mssim = 0.0;
    double val_sam = 0.0;
    bool is_best = false;
};

struct TrainLog {
    std::vector<TrainLogRow> rows;
    int best_epoch = -1;
    double best_val_mpsnr = 0.0;
    std::string stop_reason;

    std::string to_csv() const {
        std::string out = "epoch,train_loss,evaluated,val_mpsnr,val_mssim,val_sam,is_best\n";
        char buf[256];
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof buf, "%d,%.9g,%d,%.9g,%.9g,%.9g,%d\n", r.epoch,
                          r.train_loss, r.evaluated ? 1 : 0, r.val_mpsnr, r.val_mssim, r.val_sam,
                          r.is_best ? 1 : 0);
            out += buf;
        }
        std::snprintf(buf, sizeof buf, "# best_epoch=%d best_val_mpsnr=%.9g stop=%s\n",
                      best_epoch, best_val_mpsnr, stop_reason.c_str());
        out += buf;
        return out;
    }
};

inline GroupSpec group_spec_for(const ModelConfig& cfg, int bands) {
    if (!cfg.use_band_grouping) {
        GroupSpec s;
        s.group_size = bands;
        s.overlap = 0;
        s.intervals.emplace_back(0, bands);
        return s;
    }
    return make_groups(bands, cfg.group_size, cfg.overlap);
}

// Full split -> per-group forward -> merge pipeline for one LR batch.
// Returns the merged prediction Var (training) so losses backpropagate into
// every group through the shared weights.
template <typename T>
Var<T> forward_pipeline(FginModel<T>& model, const Tensor<T>& lr_batch, const GroupSpec& spec,
                        bool training) {
    const int C = lr_batch.shape.back();
    std::vector<Var<T>> outs;
    outs.reserve(spec.intervals.size());
    for (const auto& [s, e] : spec.intervals) {
        Var<T> in = Var<T>::leaf(slice_last_axis(lr_batch, s, e), false);
        outs.push_back(model.forward(in, training));
    }
    if (outs.size() == 1) return outs[0];
    return merge_groups(outs, spec, C);
}

// Inference on a single [h,w,C] LR patch.
inline Tensor<float> predict_patch(FginModel<float>& model, const Tensor<float>& lr,
                                   bool training_mode = false) {
    Tensor<float> batched;
    batched.shape = {1, lr.dim(0), lr.dim(1), lr.dim(2)};
    batched.data = lr.data;
    const GroupSpec spec = group_spec_for(model.cfg, lr.dim(2));
    model.new_graph();
    Tensor<float> out = forward_pipeline(model, batched, spec, training_mode).value();
    model.new_graph();
    Tensor<float> hwc;
    hwc.shape = {out.dim(1), out.dim(2), out.dim(3)};
    hwc.data = std::move(out.data);
    return hwc;
}

struct TrainState {
    FginModel<float> model;
    FginModel<float> best_model;
    int64_t adam_steps = 0;
    int next_epoch = 0;
    double best_val_mpsnr = -std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    int evals_since_improve = 0;
};

struct TrainResult {
    FginModel<float> model;  // best-validation weights, restored
    TrainLog log;
    TrainState state;  // end-of-run state (resume-capable)
};

namespace detail {

inline Tensor<float> stack_batch(const std::vector<const Patch*>& ps,
                                 const std::vector<size_t>& idx, size_t lo, size_t hi, bool hr) {
    const Tensor<float>& first = hr ? ps[idx[lo]]->hr : ps[idx[lo]]->lr;
    const int B = static_cast<int>(hi - lo);
    Tensor<float> out({B, first.dim(0), first.dim(1), first.dim(2)});
    const size_t stride = static_cast<size_t>(first.numel());
    for (size_t k = lo; k < hi; ++k) {
        const Tensor<float>& t = hr ? ps[idx[k]]->hr : ps[idx[k]]->lr;
        std::copy(t.data.begin(), t.data.end(), out.data.begin() + (k - lo) * stride);
    }
    return out;
}

}  // namespace detail

inline double validation_mpsnr(FginModel<float>& model, const std::vector<const Patch*>& val,
                               double* out_mssim = nullptr, double* out_sam = nullptr) {
    double psnr = 0.0, ssim = 0.0, sa = 0.0;
    for (const auto* p : val) {
        Tensor<float> pred = predict_patch(model, p->lr);
        psnr += mpsnr(pred, p->hr);
        if (out_mssim) ssim += mssim(pred, p->hr);
        if (out_sam) sa += sam(pred, p->hr);
    }
    const double n = static_cast<double>(val.size());
    if (out_mssim) *out_mssim = ssim / n;
    if (out_sam) *out_sam = sa / n;
    return psnr / n;
}

// Training loop: seeded shuffle per epoch, L1 loss on the merged prediction,
// Adam updates, early stopping on validation MPSNR with best-weights restore.
inline TrainResult train(const PatchSet& patches, const ModelConfig& mcfg,
                         const TrainConfig& tcfg, const TrainState* resume = nullptr) {
    mcfg.validate();
    tcfg.validate();
    auto train_ps = patches.with_role(PatchRole::kTrain);
    auto val_ps = patches.with_role(PatchRole::kValidation);
    if (train_ps.empty()) throw data_error("train: empty training set");
    if (val_ps.empty()) val_ps = train_ps;  // tiny desk-scale runs
    const int bands = train_ps[0]->hr.shape.back();
    if (!mcfg.use_band_grouping && mcfg.full_bands != bands)
        throw data_error("train: full_bands does not match patch band count");
    const GroupSpec spec = group_spec_for(mcfg, bands);

    TrainResult res;
    TrainState st = resume ? *resume : TrainState{FginModel<float>(mcfg, tcfg.seed),
                                                  FginModel<float>(mcfg, tcfg.seed)};
    AdamConfig<float> adam;
    adam.lr = tcfg.learning_rate;

    std::vector<size_t> idx(train_ps.size());

    for (int epoch = st.next_epoch; epoch < tcfg.max_epochs; ++epoch) {
        // Per-epoch seed schedule so a resumed run replays the same batches;
        // the permutation must be a pure function of (seed, epoch), so start
        // from the identity every time.
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::mt19937_64 rng(tcfg.seed * 0x9E3779B97F4A7C15ULL + static_cast<uint64_t>(epoch));
        std::shuffle(idx.begin(), idx.end(), rng);

        double epoch_loss = 0.0;
        int batches = 0;
        for (size_t lo = 0; lo < idx.size(); lo += static_cast<size_t>(tcfg.batch_size)) {
            const size_t hi = std::min(idx.size(), lo + static_cast<size_t>(tcfg.batch_size));
            Tensor<float> lr_b = detail::stack_batch(train_ps, idx, lo, hi, false);
            Tensor<float> hr_b = detail::stack_batch(train_ps, idx, lo, hi, true);

            st.model.new_graph();
            Var<float> pred = forward_pipeline(st.model, lr_b, spec, true);
            Var<float> target = Var<float>::leaf(hr_b, false);
            Var<float> loss = tcfg.use_mse_loss ? mse_loss(pred, target)
                                                : l1_loss(pred, target);
            const double lval = static_cast<double>(loss.value().data[0]);
            if (!std::isfinite(lval)) {
                res.log.stop_reason = "diverged (non-finite loss)";
                res.log.best_epoch = st.best_epoch;
                res.log.best_val_mpsnr = st.best_val_mpsnr;
                res.model = st.best_epoch >= 0 ? st.best_model : st.model;
                res.state = st;
                return res;
            }
            Tensor<float> seed_grad({1});
            seed_grad.data[0] = 1.0f;
            backward(loss, seed_grad);
            st.model.params.zero_grads();
            st.model.collect_grads();
            st.model.params.adam_step(adam, ++st.adam_steps);
            st.model.new_graph();
            epoch_loss += lval;
            ++batches;
        }
        epoch_loss /= static_cast<double>(batches);

        TrainLogRow row;
        row.epoch = epoch;
        row.train_loss = epoch_loss;

        if ((epoch + 1) % tcfg.eval_every == 0) {
            row.evaluated = true;
            row.val_mpsnr = validation_mpsnr(st.model, val_ps, &row.val_mssim, &row.val_sam);
            if (row.val_mpsnr > st.best_val_mpsnr + tcfg.min_delta) {
                st.best_val_mpsnr = row.val_mpsnr;
                st.best_epoch = epoch;
                st.evals_since_improve = 0;
                st.best_model = st.model;
                st.best_model.new_graph();
                row.is_best = true;
            } else {
                ++st.evals_since_improve;
            }
        }
        res.log.rows.push_back(row);
        if (tcfg.verbose) {
            std::cout << "epoch " << epoch << " loss " << epoch_loss;
            if (row.evaluated) std::cout << " val_mpsnr " << row.val_mpsnr;
            std::cout << '\n';
        }
        st.next_epoch = epoch + 1;
        if (row.evaluated && st.evals_since_improve >= tcfg.patience) {
            res.log.stop_reason = "early stopping (no improvement for " +
                                  std::to_string(tcfg.patience) + " evaluations)";
            break;
        }
    }
    if (res.log.stop_reason.empty()) res.log.stop_reason = "max epochs reached";
    res.log.best_epoch = st.best_epoch;
    res.log.best_val_mpsnr = st.best_val_mpsnr;
    res.model = st.best_epoch >= 0 ? st.best_model : st.model;
    res.model.new_graph();
    res.state = st;
    return res;
}

// Evaluation over the test patches: inference-mode BN, one report per patch
// plus the aggregate mean.
inline std::vector<MetricsReport> evaluate(FginModel<float>& model, const PatchSet& patches) {
    auto test = patches.with_role(PatchRole::kTest);
    if (test.empty()) throw data_error("evaluate: no test patches");
    std::vector<MetricsReport> reports;
    for (const auto* p : test) {
        const auto t0 = std::chrono::steady_clock::now();
        Tensor<float> pred = predict_patch(model, p->lr);
        MetricsReport r = compute_metrics(pred, p->hr);
        r.wall_time_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        reports.push_back(std::move(r));
    }
    MetricsReport agg;
    for (const auto& r : reports) {
        agg.mpsnr += r.mpsnr;
        agg.mssim += r.mssim;
        agg.sam_degrees += r.sam_degrees;
        agg.wall_time_seconds += r.wall_time_seconds;
    }
    const double n = static_cast<double>(reports.size());
    agg.mpsnr /= n;
    agg.mssim /= n;
    agg.sam_degrees /= n;
    reports.push_back(std::move(agg));  // last row is the aggregate
    return reports;
}

}  // namespace fgin
