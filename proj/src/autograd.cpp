// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/autograd.hpp"

#include <algorithm>
#include <unordered_set>

#include "siamct/errors.hpp"

namespace siamct::ag {

namespace {
thread_local bool g_grad_enabled = true;
}

std::vector<double>& Node::ensure_grad()
{
    if (grad.size() != value.size()) {
        grad.assign(value.size(), 0.0);
    }
    return grad;
}

Var Var::constant(Tensor value)
{
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return Var(std::move(node));
}

Var Var::parameter(Tensor value)
{
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = true;
    return Var(std::move(node));
}

double Var::item() const
{
    if (size() != 1) {
        throw ShapeError("item() on a non-scalar " + shape_str(shape()));
    }
    return node_->value.data[0];
}

void Var::zero_grad()
{
    if (node_ && !node_->grad.empty()) {
        std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
    }
}

void Var::backward() const
{
    if (size() != 1) {
        throw ShapeError("backward() requires a scalar, got " + shape_str(shape()));
    }
    if (!node_->requires_grad) {
        return;
    }

    // Iterative post-order DFS gives a topological order.
    // `order` holds owning pointers: releasing a node's parents below must
    // not free nodes that are still waiting for their turn.
    std::vector<std::shared_ptr<Node>> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<std::shared_ptr<Node>, std::size_t>> stack{{node_, 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            const auto& parent = node->parents[next++];
            if (parent != nullptr && parent->requires_grad && visited.insert(parent.get()).second) {
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    node_->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = it->get();
        if (node->backward) {
            node->ensure_grad();
            node->backward(*node);
            // Release the graph behind this node; leaves keep their grads.
            node->backward = nullptr;
            node->parents.clear();
        }
    }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var make_result(Tensor value, const std::vector<Var>& parents, std::function<void(Node&)> backward)
{
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    if (g_grad_enabled) {
        const bool any = std::any_of(parents.begin(), parents.end(), [](const Var& p) { return p.requires_grad(); });
        if (any) {
            node->requires_grad = true;
            node->parents.reserve(parents.size());
            for (const auto& p : parents) {
                node->parents.push_back(p.node());
            }
            node->backward = std::move(backward);
        }
    }
    return Var(std::move(node));
}

Var make_result(Tensor value, std::initializer_list<Var> parents, std::function<void(Node&)> backward)
{
    return make_result(std::move(value), std::vector<Var>(parents), std::move(backward));
}

}  // namespace siamct::ag
