#pragma once

#include <iostream>
#include <utility>
#include <vector>

#include "fgin/autodiff.hpp"
#include "fgin/tensor.hpp"

namespace fgin {

// Overlapping band grouping: the spectral axis is covered by fixed-size
// half-open intervals advancing by stride = group_size - overlap; the final
// interval is shifted back (never shortened) so a shared-weight network sees
// a constant input width.

struct GroupSpec {
    std::vector<std::pair<int, int>> intervals;  // half-open [start, end)
    int group_size = 0;
    int overlap = 0;
};

inline GroupSpec make_groups(int bands, int group_size, int overlap) {
    if (bands < 1) throw shape_error("make_groups: band count must be positive");
    if (overlap < 0 || overlap >= group_size)
        throw data_error("make_groups: overlap must satisfy 0 <= overlap < group_size");
    GroupSpec spec;
    spec.group_size = group_size;
    spec.overlap = overlap;
    if (group_size > bands) {
        std::cerr << "warning: group size " << group_size << " exceeds band count " << bands
                  << "; using a single group [0," << bands << ")\n";
        spec.group_size = bands;
        spec.intervals.emplace_back(0, bands);
        return spec;
    }
    const int stride = group_size - overlap;
    for (int start = 0;; start += stride) {
        if (start + group_size >= bands) {
            spec.intervals.emplace_back(bands - group_size, bands);
            break;
        }
        spec.intervals.emplace_back(start, start + group_size);
    }
    return spec;
}

inline int coverage_count(const GroupSpec& spec, int band) {
    int n = 0;
    for (const auto& [s, e] : spec.intervals)
        if (band >= s && band < e) ++n;
    return n;
}

template <typename T>
std::vector<Tensor<T>> split_groups(const Tensor<T>& cube, const GroupSpec& spec) {
    const int C = cube.shape.back();
    if (spec.intervals.empty() || spec.intervals.back().second != C)
        throw shape_error("split_groups: spec does not cover the cube's " + std::to_string(C) +
                          " bands");
    std::vector<Tensor<T>> out;
    out.reserve(spec.intervals.size());
    for (const auto& [s, e] : spec.intervals) out.push_back(slice_last_axis(cube, s, e));
    return out;
}

// Each output band is the unweighted mean of every group's prediction for it.
template <typename T>
Tensor<T> merge_groups(const std::vector<Tensor<T>>& groups, const GroupSpec& spec, int bands) {
    if (groups.size() != spec.intervals.size())
        throw shape_error("merge_groups: expected " + std::to_string(spec.intervals.size()) +
                          " groups, got " + std::to_string(groups.size()));
    std::vector<int> oshape = groups[0].shape;
    oshape.back() = bands;
    Tensor<T> out(oshape);
    std::vector<T> counts(static_cast<size_t>(bands), T(0));
    for (const auto& [s, e] : spec.intervals)
        for (int c = s; c < e; ++c) counts[static_cast<size_t>(c)] += T(1);
    const int64_t N = out.numel() / bands;
    for (size_t g = 0; g < groups.size(); ++g) {
        const auto [s, e] = spec.intervals[g];
        const int gc = e - s;
        if (groups[g].shape.back() != gc)
            throw shape_error("merge_groups: group " + std::to_string(g) + " has " +
                              std::to_string(groups[g].shape.back()) + " bands, interval needs " +
                              std::to_string(gc));
        std::vector<int> expect = oshape;
        expect.back() = gc;
        if (groups[g].shape != expect)
            throw shape_error("merge_groups: spatial mismatch on group " + std::to_string(g));
        for (int64_t n = 0; n < N; ++n) {
            const T* gp = &groups[g].data[static_cast<size_t>(n) * gc];
            T* op = &out.data[static_cast<size_t>(n) * bands + s];
            for (int c = 0; c < gc; ++c) op[c] += gp[c];
        }
    }
    for (int64_t n = 0; n < N; ++n) {
        T* op = &out.data[static_cast<size_t>(n) * bands];
        for (int c = 0; c < bands; ++c) op[c] /= counts[static_cast<size_t>(c)];
    }
    return out;
}

// Tape variant used during training so the L1 loss on the merged cube
// backpropagates into every group's graph.
template <typename T>
Var<T> merge_groups(const std::vector<Var<T>>& groups, const GroupSpec& spec, int bands) {
    std::vector<Tensor<T>> vals;
    std::vector<std::shared_ptr<Node<T>>> parents;
    for (const auto& g : groups) {
        vals.push_back(g.value());
        parents.push_back(g.node());
    }
    Tensor<T> y = merge_groups(vals, spec, bands);
    auto par = parents;
    auto intervals = spec.intervals;
    return make_op_node<T>(std::move(y), std::move(parents),
                           [par, intervals, bands](Node<T>& self) {
        std::vector<T> counts(static_cast<size_t>(bands), T(0));
        for (const auto& [s, e] : intervals)
            for (int c = s; c < e; ++c) counts[static_cast<size_t>(c)] += T(1);
        const int64_t N = self.grad.numel() / bands;
        for (size_t g = 0; g < par.size(); ++g) {
            const auto [s, e] = intervals[g];
            const int gc = e - s;
            std::vector<int> gshape = self.grad.shape;
            gshape.back() = gc;
            Tensor<T> gg(gshape);
            for (int64_t n = 0; n < N; ++n) {
                const T* up = &self.grad.data[static_cast<size_t>(n) * bands + s];
                T* gp = &gg.data[static_cast<size_t>(n) * gc];
                for (int c = 0; c < gc; ++c)
                    gp[c] = up[c] / counts[static_cast<size_t>(s + c)];
            }
            par[g]->accumulate(gg);
        }
    });
}

}  // namespace fgin
