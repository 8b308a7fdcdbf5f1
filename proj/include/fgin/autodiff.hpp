#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "fgin/ops.hpp"
#include "fgin/tensor.hpp"

namespace fgin {

// Lightweight dynamic tape. Every op records a node holding the forward
// value and a closure that scatters the node's accumulated gradient into its
// parents. Node ids are monotone, so reverse-id order is a valid reverse
// topological order of any graph built in one thread.

namespace detail {
inline std::atomic<int64_t>& node_counter() {
    static std::atomic<int64_t> c{0};
    return c;
}
}  // namespace detail

template <typename T>
struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    bool grad_ready = false;
    int64_t id = 0;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;  // reads this->grad, adds into parents

    void accumulate(const Tensor<T>& g) {
        if (!grad_ready) {
            grad = Tensor<T>(value.shape);
            grad_ready = true;
        }
        for (int64_t i = 0; i < grad.numel(); ++i) grad.data[i] += g.data[i];
    }
};

template <typename T>
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

    // Leaf variable.
    static Var leaf(Tensor<T> value, bool requires_grad) {
        auto n = std::make_shared<Node<T>>();
        n->value = std::move(value);
        n->requires_grad = requires_grad;
        n->id = ++detail::node_counter();
        return Var(std::move(n));
    }

    const Tensor<T>& value() const { return node_->value; }
    const Tensor<T>& grad() const {
        if (!node_->grad_ready) throw error("Var::grad: no gradient accumulated");
        return node_->grad;
    }
    bool has_grad() const { return node_ && node_->grad_ready; }
    std::shared_ptr<Node<T>> node() const { return node_; }
    bool valid() const { return static_cast<bool>(node_); }

private:
    std::shared_ptr<Node<T>> node_;
};

template <typename T>
Var<T> make_op_node(Tensor<T> value, std::vector<std::shared_ptr<Node<T>>> parents,
                    std::function<void(Node<T>&)> backprop) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    n->requires_grad = false;
    for (const auto& p : n->parents)
        if (p->requires_grad) n->requires_grad = true;
    if (n->requires_grad) n->backprop = std::move(backprop);
    n->id = ++detail::node_counter();
    return Var<T>(std::move(n));
}

// Reverse sweep from `root`, seeding with `upstream`.
template <typename T>
void backward(const Var<T>& root, const Tensor<T>& upstream) {
    require_same_shape(root.value(), upstream, "backward");
    // Collect reachable nodes.
    std::vector<std::shared_ptr<Node<T>>> nodes;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::shared_ptr<Node<T>>> stack{root.node()};
    while (!stack.empty()) {
        auto n = stack.back();
        stack.pop_back();
        if (!seen.insert(n.get()).second) continue;
        nodes.push_back(n);
        for (const auto& p : n->parents) stack.push_back(p);
    }
    std::sort(nodes.begin(), nodes.end(),
              [](const auto& a, const auto& b) { return a->id > b->id; });
    root.node()->accumulate(upstream);
    for (const auto& n : nodes)
        if (n->requires_grad && n->grad_ready && n->backprop) n->backprop(*n);
}

// ---------------------------------------------------------------------------
// Graph-building wrappers around the kernels in ops.hpp.

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
    Tensor<T> y = conv2d_forward(x.value(), w.value(), b.value());
    auto xn = x.node(), wn = w.node(), bn = b.node();
    return make_op_node<T>(std::move(y), {xn, wn, bn}, [xn, wn, bn](Node<T>& self) {
        Tensor<T> gx, gw, gb;
        conv2d_backward(xn->value, wn->value, self.grad, gx, gw, gb);
        xn->accumulate(gx);
        wn->accumulate(gw);
        bn->accumulate(gb);
    });
}

template <typename T>
Var<T> depthwise_conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
    Tensor<T> y = depthwise_forward(x.value(), w.value(), b.value());
    auto xn = x.node(), wn = w.node(), bn = b.node();
    return make_op_node<T>(std::move(y), {xn, wn, bn}, [xn, wn, bn](Node<T>& self) {
        Tensor<T> gx, gw, gb;
        depthwise_backward(xn->value, wn->value, self.grad, gx, gw, gb);
        xn->accumulate(gx);
        wn->accumulate(gw);
        bn->accumulate(gb);
    });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
    auto xn = x.node();
    return make_op_node<T>(relu_forward(x.value()), {xn}, [xn](Node<T>& self) {
        xn->accumulate(relu_backward(xn->value, self.grad));
    });
}

template <typename T>
Var<T> batchnorm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, BatchNormStats<T>& st,
                 bool training) {
    auto cache = std::make_shared<BatchNormCache<T>>();
    Tensor<T> y =
        batchnorm_forward(x.value(), gamma.value(), beta.value(), st, training, cache.get());
    auto xn = x.node(), gn = gamma.node(), bn = beta.node();
    return make_op_node<T>(std::move(y), {xn, gn, bn}, [xn, gn, bn, cache](Node<T>& self) {
        Tensor<T> gx, gg, gb;
        batchnorm_backward(xn->value, gn->value, *cache, self.grad, gx, gg, gb);
        xn->accumulate(gx);
        gn->accumulate(gg);
        bn->accumulate(gb);
    });
}

template <typename T>
Var<T> bilinear_resize(const Var<T>& x, int scale) {
    auto xn = x.node();
    return make_op_node<T>(bilinear_forward(x.value(), scale), {xn}, [xn, scale](Node<T>& self) {
        xn->accumulate(bilinear_backward(xn->value.shape, scale, self.grad));
    });
}

template <typename T>
Var<T> area_downsample(const Var<T>& x, int scale) {
    auto xn = x.node();
    return make_op_node<T>(area_downsample_forward(x.value(), scale), {xn},
                           [xn, scale](Node<T>& self) {
                               xn->accumulate(
                                   area_downsample_backward(xn->value.shape, scale, self.grad));
                           });
}

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& xs) {
    std::vector<const Tensor<T>*> ptrs;
    std::vector<std::shared_ptr<Node<T>>> parents;
    std::vector<std::vector<int>> shapes;
    for (const auto& x : xs) {
        ptrs.push_back(&x.value());
        parents.push_back(x.node());
        shapes.push_back(x.value().shape);
    }
    Tensor<T> y = concat_channels_forward(ptrs);
    auto par = parents;
    return make_op_node<T>(std::move(y), std::move(parents), [par, shapes](Node<T>& self) {
        auto gs = concat_channels_backward(shapes, self.grad);
        for (size_t i = 0; i < par.size(); ++i) par[i]->accumulate(gs[i]);
    });
}

template <typename T>
Var<T> add(const Var<T>& x, const Var<T>& y) {
    auto xn = x.node(), yn = y.node();
    return make_op_node<T>(add_forward(x.value(), y.value()), {xn, yn}, [xn, yn](Node<T>& self) {
        xn->accumulate(self.grad);
        yn->accumulate(self.grad);
    });
}

// Scalar losses are returned as [1]-shaped tensors so backward() stays uniform.
template <typename T>
Var<T> l1_loss(const Var<T>& pred, const Var<T>& target) {
    Tensor<T> y({1});
    y.data[0] = l1_loss_forward(pred.value(), target.value());
    auto pn = pred.node(), tn = target.node();
    return make_op_node<T>(std::move(y), {pn, tn}, [pn, tn](Node<T>& self) {
        const T up = self.grad.data[0];
        pn->accumulate(l1_loss_backward(pn->value, tn->value, up));
        Tensor<T> gt = l1_loss_backward(pn->value, tn->value, -up);
        tn->accumulate(gt);
    });
}

template <typename T>
Var<T> mse_loss(const Var<T>& pred, const Var<T>& target) {
    Tensor<T> y({1});
    y.data[0] = mse_loss_forward(pred.value(), target.value());
    auto pn = pred.node(), tn = target.node();
    return make_op_node<T>(std::move(y), {pn, tn}, [pn, tn](Node<T>& self) {
        const T up = self.grad.data[0];
        pn->accumulate(mse_loss_backward(pn->value, tn->value, up));
        Tensor<T> gt = mse_loss_backward(pn->value, tn->value, -up);
        tn->accumulate(gt);
    });
}

}  // namespace fgin
