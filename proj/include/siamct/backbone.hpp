// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "siamct/autograd.hpp"
#include "siamct/nn.hpp"
#include "siamct/tensor.hpp"

namespace siamct::backbone {

inline constexpr std::size_t kFeatureChannels = 768;  // three 256-channel levels
inline constexpr std::size_t kFeatureSize = 31;
inline constexpr std::size_t kSearchSize = 255;
inline constexpr std::size_t kReferenceSize = 127;

/// Maps a search crop {3, S, S} to a feature map {C, H, W}.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::size_t input_size() const = 0;
    virtual Shape output_shape() const = 0;
    virtual Tensor extract(const Tensor& crop) const = 0;
};

struct ToyBackboneConfig {
    std::size_t input_size = kSearchSize;
    std::vector<std::size_t> widths{16, 32, 64};  // one stride-2 block each
    std::size_t out_channels = kFeatureChannels;
    std::uint64_t seed = 0;

    std::size_t output_size() const;

    static ToyBackboneConfig full();
    /// 95x95 crops to 24 x 11 x 11 maps.
    static ToyBackboneConfig desk();
};

/// Stride-2 3x3 convolutions with ReLU followed by a 3x3 same-size
/// projection to the output width. He-normal weights, zero biases.
class ToyBackbone final : public FeatureExtractor {
public:
    explicit ToyBackbone(const ToyBackboneConfig& config);

    std::size_t input_size() const override { return config_.input_size; }
    Shape output_shape() const override;
    Tensor extract(const Tensor& crop) const override;

    /// Differentiable forward pass.
    ag::Var forward(const ag::Var& crop) const;

    const ToyBackboneConfig& config() const { return config_; }
    nn::ParameterSet& params() { return params_; }
    const nn::ParameterSet& params() const { return params_; }

private:
    ToyBackboneConfig config_;
    nn::ParameterSet params_;
    std::vector<nn::Conv2d> layers_;
};

/// Precomputed feature maps keyed by (sequence id, frame index), e.g. exports
/// from a real tracker backbone.
class FeatureStore {
public:
    static FeatureStore load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    void add(const std::string& sequence_id, int frame_index, Tensor features);
    bool contains(const std::string& sequence_id, int frame_index) const;
    const Tensor& get(const std::string& sequence_id, int frame_index) const;
    std::size_t size() const { return maps_.size(); }

    static std::string key(const std::string& sequence_id, int frame_index);

private:
    std::map<std::string, Tensor> maps_;
    Shape shape_;
};

}  // namespace siamct::backbone
