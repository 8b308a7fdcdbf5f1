#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fgin/autodiff.hpp"

namespace fgin {

// Finite-difference oracle. The checked function rebuilds its graph on every
// call from a set of leaf tensors; the oracle probes random coordinates of
// those leaves with central differences and compares against one analytic
// reverse sweep through a fixed random projection of the output.

struct GradCheckResult {
    double max_rel_error = 0.0;
    int probes = 0;
    std::string worst_coord;
};

using GradCheckFn = std::function<Var<double>(const std::vector<Var<double>>&)>;

inline GradCheckResult gradcheck(const GradCheckFn& f, std::vector<Tensor<double>> inputs,
                                 int probes = 64, double h = 1e-4, uint64_t seed = 1234) {
    auto build = [&](const std::vector<Tensor<double>>& ins, bool want_grad) {
        std::vector<Var<double>> leaves;
        leaves.reserve(ins.size());
        for (const auto& t : ins) leaves.push_back(Var<double>::leaf(t, want_grad));
        return std::make_pair(f(leaves), leaves);
    };

    auto [y0, leaves0] = build(inputs, true);
    // Fixed random projection r; scalar objective L = sum(y .* r).
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Tensor<double> r(y0.value().shape);
    for (auto& v : r.data) v = unit(rng);

    auto objective = [&r](const Tensor<double>& y) {
        double L = 0.0;
        for (int64_t i = 0; i < y.numel(); ++i) L += y.data[i] * r.data[i];
        return L;
    };

    // Determinism guard: a second forward must reproduce the first bitwise.
    {
        auto [y1, l1] = build(inputs, false);
        if (y1.value().data != y0.value().data)
            throw numeric_error("gradcheck: op forward is non-deterministic");
    }

    backward(y0, r);

    int64_t total = 0;
    for (const auto& t : inputs) total += t.numel();
    if (total == 0) throw error("gradcheck: no input coordinates");

    GradCheckResult res;
    res.probes = probes;
    std::uniform_int_distribution<int64_t> pick(0, total - 1);
    for (int p = 0; p < probes; ++p) {
        int64_t flat = pick(rng);
        size_t which = 0;
        while (flat >= inputs[which].numel()) {
            flat -= inputs[which].numel();
            ++which;
        }
        const double orig = inputs[which].data[flat];
        inputs[which].data[flat] = orig + h;
        const double lp = objective(build(inputs, false).first.value());
        inputs[which].data[flat] = orig - h;
        const double lm = objective(build(inputs, false).first.value());
        inputs[which].data[flat] = orig;

        const double numeric = (lp - lm) / (2.0 * h);
        const double analytic =
            leaves0[which].has_grad() ? leaves0[which].grad().data[flat] : 0.0;
        const double rel = std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
        if (rel > res.max_rel_error) {
            res.max_rel_error = rel;
            res.worst_coord = "input " + std::to_string(which) + " coord " + std::to_string(flat);
        }
    }
    return res;
}

// Convenience: fill a tensor with seeded uniform values in [lo, hi].
template <typename T>
Tensor<T> random_tensor(std::vector<int> shape, uint64_t seed, T lo = T(-1), T hi = T(1)) {
    Tensor<T> t(std::move(shape));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(static_cast<double>(lo), static_cast<double>(hi));
    for (auto& v : t.data) v = static_cast<T>(d(rng));
    return t;
}

}  // namespace fgin
