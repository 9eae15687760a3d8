// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "siamct/backbone.hpp"
#include "siamct/head.hpp"
#include "siamct/model_ca.hpp"
#include "siamct/model_dfg.hpp"
#include "siamct/pipeline.hpp"
#include "siamct/synthetic.hpp"
#include "siamct/text_encoding.hpp"

namespace siamct::testing {

/// Miniature configurations used by the gradient checks: feature maps of
/// 8 channels, 4 x 12 sentence matrices.
model::DfgConfig mini_dfg(bool attention);
model::CaConfig mini_ca(bool ppm);
/// Toy backbone producing 8 x `spatial` x `spatial` maps.
backbone::ToyBackboneConfig mini_backbone(std::size_t spatial);

Tensor random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0);

/// A fixed batch drawn from the synthetic corpus through the desk backbone
/// and a hash embedding provider: `per_class` positives and negatives.
std::vector<pipeline::EncodedSample> synthetic_batch(std::size_t per_class, std::uint64_t seed);

/// One head on miniature dimensions with a fixed input, for gradient checks.
struct GradCase {
    std::unique_ptr<model::Head> head;
    std::unique_ptr<backbone::ToyBackbone> backbone;
    Tensor crop;
    Tensor features;  // backbone output for `crop`
    Tensor sentence;  // last row is padding
    std::size_t valid_length = 0;
    double label = 0.0;

    /// BCE of the head on precomputed features.
    ag::Var head_loss() const;
    /// BCE through backbone and head.
    ag::Var full_loss() const;
};

/// Head, backbone, crop and sentence all seeded from `seed`.
GradCase grad_case(model::HeadKind kind, std::uint64_t seed);

/// Seed of the gradient-check fixture shared by all four heads.
inline constexpr std::uint64_t kGradSeed = 17;

}  // namespace siamct::testing
