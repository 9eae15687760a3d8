// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "siamct/autograd.hpp"
#include "siamct/ops.hpp"

namespace siamct::nn {

using ag::Var;

/// Ordered, named collection of trainable leaves. Names are unique and are
/// the keys used by checkpoints.
class ParameterSet {
public:
    Var add(std::string name, Tensor init);

    const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
    std::vector<std::pair<std::string, Var>>& entries() { return entries_; }

    Var get(std::string_view name) const;
    bool contains(std::string_view name) const;
    std::size_t scalar_count() const;

    void zero_grad();
    void set_requires_grad(bool on);

private:
    std::vector<std::pair<std::string, Var>> entries_;
};

Tensor uniform(Shape shape, double bound, std::mt19937_64& rng);
Tensor normal(Shape shape, double stddev, std::mt19937_64& rng);

struct Linear {
    Var weight;  // {out, in}
    Var bias;    // {out}, may be undefined

    Var operator()(const Var& x) const { return ops::linear(x, weight, bias); }
};

/// Weights U(-1/sqrt(in), 1/sqrt(in)); zero bias.
Linear make_linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                   std::mt19937_64& rng, bool with_bias = true);

struct Conv2d {
    Var weight;  // {out, in/groups, kh, kw}
    Var bias;
    ops::ConvSpec spec;

    Var operator()(const Var& x) const { return ops::conv2d(x, weight, bias, spec); }
};

Conv2d make_conv2d(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                   const ops::ConvSpec& spec, std::mt19937_64& rng);

struct Conv1d {
    Var weight;  // {out, in/groups, k}
    Var bias;
    std::size_t kernel = 1;
    std::size_t padding = 0;
    std::size_t groups = 1;

    Var operator()(const Var& x) const { return ops::conv1d(x, weight, bias, kernel, padding, groups); }
};

Conv1d make_conv1d(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                   std::size_t kernel, std::size_t padding, std::size_t groups, std::mt19937_64& rng);

struct LayerNorm {
    Var gamma;
    Var beta;

    Var operator()(const Var& x) const { return ops::layer_norm_rows(x, gamma, beta, 1e-6); }
};

LayerNorm make_layer_norm(ParameterSet& params, const std::string& name, std::size_t width);

}  // namespace siamct::nn
