#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "fgin/tensor.hpp"

namespace fgin {

// Named parameter tensors with paired gradient buffers and Adam moment state.
template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> m;  // Adam first moment
    Tensor<T> v;  // Adam second moment
    bool has_grad = false;
};

template <typename T>
struct AdamConfig {
    T lr = T(1e-4);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
};

template <typename T>
class ParamStore {
public:
    Param<T>& add(const std::string& name, Tensor<T> init) {
        if (index_.count(name)) throw data_error("duplicate parameter name: " + name);
        Param<T> p;
        p.name = name;
        p.grad = Tensor<T>(init.shape);
        p.m = Tensor<T>(init.shape);
        p.v = Tensor<T>(init.shape);
        p.value = std::move(init);
        index_[name] = items_.size();
        items_.push_back(std::move(p));
        return items_.back();
    }

    Param<T>& get(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw data_error("unknown parameter: " + name);
        return items_[it->second];
    }
    const Param<T>& get(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw data_error("unknown parameter: " + name);
        return items_[it->second];
    }
    bool has(const std::string& name) const { return index_.count(name) != 0; }

    size_t index_of(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw data_error("unknown parameter: " + name);
        return it->second;
    }

    std::vector<Param<T>>& items() { return items_; }
    const std::vector<Param<T>>& items() const { return items_; }
    size_t size() const { return items_.size(); }

    void zero_grads() {
        for (auto& p : items_) {
            std::fill(p.grad.data.begin(), p.grad.data.end(), T(0));
            p.has_grad = false;
        }
    }

    void zero_values() {
        for (auto& p : items_) std::fill(p.value.data.begin(), p.value.data.end(), T(0));
    }

    int64_t census() const {
        int64_t n = 0;
        for (const auto& p : items_) n += p.value.numel();
        return n;
    }

    // Bias-corrected Adam update; t is the 1-based step index.
    void adam_step(const AdamConfig<T>& cfg, int64_t t) {
        if (t < 1) throw data_error("adam_step: step index must be >= 1");
        const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(cfg.beta1), static_cast<double>(t)));
        const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(cfg.beta2), static_cast<double>(t)));
        for (auto& p : items_) {
            if (!p.has_grad)
                throw data_error("adam_step: missing gradient for parameter " + p.name);
            for (int64_t i = 0; i < p.value.numel(); ++i) {
                const T g = p.grad.data[i];
                p.m.data[i] = cfg.beta1 * p.m.data[i] + (T(1) - cfg.beta1) * g;
                p.v.data[i] = cfg.beta2 * p.v.data[i] + (T(1) - cfg.beta2) * g * g;
                const T mhat = p.m.data[i] / bc1;
                const T vhat = p.v.data[i] / bc2;
                p.value.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
            }
        }
    }

private:
    std::vector<Param<T>> items_;
    std::unordered_map<std::string, size_t> index_;
};

}  // namespace fgin
