// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "siamct/autograd.hpp"

/// Differentiable tensor operations. Layout conventions: matrices are
/// {rows, cols}; feature maps are {channels, height, width}; 1-D signals for
/// convolutions are {channels, length}.
namespace siamct::ops {

using ag::Var;

Var add(const Var& a, const Var& b);
/// x {m, n} plus a length-n vector broadcast over rows.
Var add_row(const Var& x, const Var& row);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);

Var matmul(const Var& a, const Var& b);
/// y = x * weight^T + bias, x {m, in}, weight {out, in}, bias {out} or undefined.
Var linear(const Var& x, const Var& weight, const Var& bias);
Var transpose(const Var& a);
Var reshape(const Var& a, Shape shape);

Var relu(const Var& a);
Var tanh(const Var& a);
Var sigmoid(const Var& a);

Var slice_cols(const Var& a, std::size_t begin, std::size_t count);
Var concat_cols(const std::vector<Var>& parts);
/// Concatenates along the leading axis (channels for feature maps).
Var concat_leading(const std::vector<Var>& parts);

/// Row-wise softmax. When `keep` is nonempty it has one flag per column and
/// columns flagged false get exactly zero probability.
Var softmax_rows(const Var& a, std::span<const std::uint8_t> keep = {});

Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-6);

/// Inverted dropout; identity when p == 0.
Var dropout(const Var& x, double p, std::mt19937_64& rng);

struct ConvSpec {
    std::size_t kernel_h = 1;
    std::size_t kernel_w = 1;
    std::size_t stride_h = 1;
    std::size_t stride_w = 1;
    std::size_t pad_h = 0;
    std::size_t pad_w = 0;
    std::size_t groups = 1;
};

/// x {C, H, W}, weight {O, C/groups, kh, kw}, bias {O} or undefined.
Var conv2d(const Var& x, const Var& weight, const Var& bias, const ConvSpec& spec);
/// x {C, L}, weight {O, C/groups, k}, bias {O} or undefined.
Var conv1d(const Var& x, const Var& weight, const Var& bias, std::size_t kernel, std::size_t padding,
           std::size_t groups = 1);

/// Floor-mode max pooling without padding over x {C, H, W}.
Var max_pool2d(const Var& x, std::size_t kernel_h, std::size_t kernel_w, std::size_t stride_h,
               std::size_t stride_w);
/// x {C, L}.
Var max_pool1d(const Var& x, std::size_t kernel, std::size_t stride);

/// Separable linear resampling: out[c] = rows * x[c] * cols^T with
/// rows {h_out, H} and cols {w_out, W}. Used for adaptive pooling and
/// bilinear upsampling.
Var resample_spatial(const Var& x, const Tensor& rows, const Tensor& cols);

/// Global average over H, W: {C, H, W} -> {1, C}.
Var mean_spatial(const Var& x);
/// x {C, H, W} scaled per channel by f (C values).
Var scale_channels(const Var& x, const Var& f);

Var sum(const Var& a);

/// Binary cross-entropy of a probability; the probability is clamped to
/// [clamp, 1 - clamp] before the logs.
Var bce(const Var& probability, double label, double clamp = 1e-7);

/// Adaptive average pooling matrix {out, in} (bin edges floor/ceil).
Tensor adaptive_pool_matrix(std::size_t in, std::size_t out);
/// Bilinear interpolation matrix {out, in} with aligned corners.
Tensor bilinear_matrix(std::size_t in, std::size_t out);

}  // namespace siamct::ops
