// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/nn.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "siamct/errors.hpp"

namespace siamct::nn {

Var ParameterSet::add(std::string name, Tensor init)
{
    if (contains(name)) {
        throw ValidationError(fmt::format("duplicate parameter name '{}'", name));
    }
    Var v = Var::parameter(std::move(init));
    entries_.emplace_back(std::move(name), v);
    return v;
}

Var ParameterSet::get(std::string_view name) const
{
    for (const auto& [n, v] : entries_) {
        if (n == name) {
            return v;
        }
    }
    throw ValidationError(fmt::format("unknown parameter '{}'", name));
}

bool ParameterSet::contains(std::string_view name) const
{
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

std::size_t ParameterSet::scalar_count() const
{
    std::size_t n = 0;
    for (const auto& e : entries_) {
        n += e.second.size();
    }
    return n;
}

void ParameterSet::zero_grad()
{
    for (auto& e : entries_) {
        e.second.zero_grad();
    }
}

void ParameterSet::set_requires_grad(bool on)
{
    for (auto& e : entries_) {
        e.second.node()->requires_grad = on;
    }
}

Tensor uniform(Shape shape, double bound, std::mt19937_64& rng)
{
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.data) {
        v = dist(rng);
    }
    return t;
}

Tensor normal(Shape shape, double stddev, std::mt19937_64& rng)
{
    Tensor t(std::move(shape));
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& v : t.data) {
        v = dist(rng);
    }
    return t;
}

Linear make_linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                   std::mt19937_64& rng, bool with_bias)
{
    Linear layer;
    layer.weight = params.add(name + ".weight", uniform({out, in}, 1.0 / std::sqrt(static_cast<double>(in)), rng));
    if (with_bias) {
        layer.bias = params.add(name + ".bias", Tensor({out}));
    }
    return layer;
}

Conv2d make_conv2d(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                   const ops::ConvSpec& spec, std::mt19937_64& rng)
{
    const std::size_t fan_in = in / spec.groups * spec.kernel_h * spec.kernel_w;
    Conv2d layer;
    layer.spec = spec;
    layer.weight = params.add(name + ".weight", uniform({out, in / spec.groups, spec.kernel_h, spec.kernel_w},
                                                        1.0 / std::sqrt(static_cast<double>(fan_in)), rng));
    layer.bias = params.add(name + ".bias", Tensor({out}));
    return layer;
}

Conv1d make_conv1d(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                   std::size_t kernel, std::size_t padding, std::size_t groups, std::mt19937_64& rng)
{
    const std::size_t fan_in = in / groups * kernel;
    Conv1d layer;
    layer.kernel = kernel;
    layer.padding = padding;
    layer.groups = groups;
    layer.weight = params.add(name + ".weight",
                              uniform({out, in / groups, kernel}, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng));
    layer.bias = params.add(name + ".bias", Tensor({out}));
    return layer;
}

LayerNorm make_layer_norm(ParameterSet& params, const std::string& name, std::size_t width)
{
    LayerNorm ln;
    ln.gamma = params.add(name + ".gamma", Tensor({width}, 1.0));
    ln.beta = params.add(name + ".beta", Tensor({width}));
    return ln;
}

}  // namespace siamct::nn
