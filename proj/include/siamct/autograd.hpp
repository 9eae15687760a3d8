// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "siamct/tensor.hpp"

namespace siamct::ag {

/// One value in the computation graph. Non-leaf nodes hold a closure that
/// pushes their gradient into their parents.
struct Node {
    Tensor value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    std::vector<double>& ensure_grad();
};

/// Handle to a graph node with value semantics on the handle (copies alias
/// the same node, like a tensor in most autodiff frameworks).
class Var {
public:
    Var() = default;

    static Var constant(Tensor value);
    static Var parameter(Tensor value);

    bool defined() const { return static_cast<bool>(node_); }
    const Tensor& value() const { return node_->value; }
    Tensor& mutable_value() { return node_->value; }
    const Shape& shape() const { return node_->value.shape; }
    std::size_t size() const { return node_->value.size(); }
    double item() const;

    bool requires_grad() const { return node_ && node_->requires_grad; }
    std::span<const double> grad() const { return node_->grad; }
    std::vector<double>& mutable_grad() { return node_->ensure_grad(); }
    void zero_grad();

    /// Reverse-mode sweep from this scalar. Frees the intermediate graph.
    void backward() const;

    const std::shared_ptr<Node>& node() const { return node_; }

private:
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
    std::shared_ptr<Node> node_;

    friend Var make_result(Tensor, std::initializer_list<Var>, std::function<void(Node&)>);
    friend Var make_result(Tensor, const std::vector<Var>&, std::function<void(Node&)>);
};

bool grad_enabled();

/// Disables graph recording in the current thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

/// Builds an op result. The backward closure is dropped when no parent
/// requires a gradient or recording is disabled.
Var make_result(Tensor value, std::initializer_list<Var> parents, std::function<void(Node&)> backward);
Var make_result(Tensor value, const std::vector<Var>& parents, std::function<void(Node&)> backward);

}  // namespace siamct::ag
