// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <cstdint>
#include <vector>

#include "siamct/head.hpp"

namespace siamct::model {

struct CaConfig {
    std::size_t input_channels = 768;
    std::size_t spatial = 31;
    std::size_t sentence_length = 20;
    std::size_t embed_dim = 300;
    std::size_t layers = 3;
    std::size_t hidden = 768;
    std::size_t heads = 6;
    std::size_t head_dim = 128;
    double dropout = 0.1;
    std::size_t feed_forward = 512;
    std::size_t reduction_hidden = 512;
    std::size_t reduction_output = 1024;
    std::size_t groups = 8;  // grouped 1-D convolution of the image reducer
    bool use_ppm = false;
    std::vector<std::size_t> ppm_scales{1, 2, 3, 6};
    std::size_t ppm_width = 64;  // projected channels per scale
    bool mask_padding = true;
    std::uint64_t seed = 0;

    static CaConfig plain();
    static CaConfig ppm();

    /// Channels entering the image reducer (input plus pyramid groups).
    std::size_t reducer_channels() const;
    std::size_t stage1_size() const;
    std::size_t image_positions() const;

    void validate() const;
    nlohmann::json to_json() const;
    static CaConfig from_json(const nlohmann::json& j);
};

/// Co-attention head: sentence and image preprocessors, optional pyramid
/// pooling, self-attention encoder over words, self+guided attention
/// decoder over image positions, attentional reduction and read-out.
class CaHead final : public Head {
public:
    explicit CaHead(const CaConfig& config);

    HeadKind kind() const override { return config_.use_ppm ? HeadKind::ca_ppm : HeadKind::ca; }
    HeadOutput forward(const HeadInput& input, bool training, std::mt19937_64* rng) const override;
    nlohmann::json config_json() const override { return config_.to_json(); }
    const CaConfig& config() const { return config_; }

    /// S {L, E} -> ReLU(linear) {L, d}.
    Var preprocess_sentence(const Var& sentence) const;
    /// X {C, H, W} -> {C + scales * width, H, W}; X occupies the first C channels.
    Var pyramid_pool(const Var& features) const;
    /// Conv + ReLU + max-pool: {C', H, W} -> {d, s1, s1}.
    Var reduce_stage1(const Var& features) const;
    /// Both reduction stages: {C', H, W} -> {positions, d}.
    Var reduce_image(const Var& features) const;

    struct Fused {
        Var words;  // {L, d}
        Var image;  // {positions, d}
        std::vector<AttentionMap> attention;
    };
    Fused mcan_forward(const Var& words, const Var& image, std::size_t valid_length, bool training,
                       std::mt19937_64* rng) const;

    /// Sum of the per-modality attention-pooled projections, {1, reduction_output}.
    Var attentional_reduce(const Var& words, const Var& image, std::size_t valid_length, bool training,
                           std::mt19937_64* rng) const;

    /// Per-column keep flags for the words, or empty when masking is off
    /// (disabled, or no valid word at all).
    std::vector<std::uint8_t> word_mask(std::size_t valid_length) const;

private:
    struct Attention {
        nn::Linear q, k, v, merge;
    };
    struct FeedForward {
        nn::Linear fc1, fc2;
    };
    struct SelfLayer {
        Attention att;
        FeedForward ffn;
        nn::LayerNorm norm1, norm2;
    };
    struct GuidedLayer {
        Attention self_att, guided;
        FeedForward ffn;
        nn::LayerNorm norm1, norm2, norm3;
    };
    struct Flatten {
        nn::Linear fc1, fc2, merge;
    };
    struct Pyramid {
        std::size_t scale;
        nn::Conv2d project;
        Tensor pool;
        Tensor upsample;
    };

    Attention make_attention(const std::string& name, std::mt19937_64& rng);
    FeedForward make_ffn(const std::string& name, std::mt19937_64& rng);
    Flatten make_flatten(const std::string& name, std::mt19937_64& rng);

    Var attend(const Attention& a, const Var& queries, const Var& keys, std::span<const std::uint8_t> keep,
               const char* block, std::size_t layer, bool training, std::mt19937_64* rng,
               std::vector<AttentionMap>* maps) const;
    Var feed_forward(const FeedForward& f, const Var& x, bool training, std::mt19937_64* rng) const;
    Var flatten(const Flatten& f, const Var& x, std::span<const std::uint8_t> keep, bool training,
                std::mt19937_64* rng) const;
    Var drop(const Var& x, bool training, std::mt19937_64* rng) const;

    CaConfig config_;
    nn::Linear sentence_proj_;
    std::vector<Pyramid> pyramid_;
    nn::Conv2d reduce_conv2d_;
    nn::Conv1d reduce_conv1d_;
    std::vector<SelfLayer> encoder_;
    std::vector<GuidedLayer> decoder_;
    Flatten flat_words_;
    Flatten flat_image_;
    nn::Linear readout_;
};

}  // namespace siamct::model
