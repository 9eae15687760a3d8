// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <cstdint>

#include "siamct/head.hpp"

namespace siamct::model {

struct DfgConfig {
    std::size_t channels = 768;
    std::size_t spatial = 31;
    std::size_t sentence_length = 20;
    std::size_t embed_dim = 300;
    std::size_t attention_hidden = 256;
    bool use_attention = true;
    std::uint64_t seed = 0;

    std::size_t word_rows() const { return sentence_length / 2; }
    std::size_t word_cols() const { return embed_dim / 2; }
    /// Length of the vector the filters are generated from.
    std::size_t filter_input() const { return use_attention ? word_cols() : word_rows() * word_cols(); }

    void validate() const;
    nlohmann::json to_json() const;
    static DfgConfig from_json(const nlohmann::json& j);
};

/// Sentence CNN, image-conditioned word attention, dynamic 1x1 filters,
/// depth-wise correlation and a linear read-out.
class DfgHead final : public Head {
public:
    explicit DfgHead(const DfgConfig& config);

    HeadKind kind() const override { return config_.use_attention ? HeadKind::dfg : HeadKind::dfg_no_att; }
    HeadOutput forward(const HeadInput& input, bool training, std::mt19937_64* rng) const override;
    nlohmann::json config_json() const override { return config_.to_json(); }
    const DfgConfig& config() const { return config_; }

    /// S {L, E} -> H {L/2, E/2}: conv1d over positions, ReLU, 2x2 max-pool.
    Var process_embeddings(const Var& sentence) const;

    struct Attended {
        Var vector;   // {1, E/2}
        Var weights;  // {1, L/2}
    };
    Attended attention_mlp(const Var& words, const Var& features) const;

    /// v {1, n} -> f {1, C} = tanh(W_f v + b_f).
    Var generate_filters(const Var& v) const;

    static Var cross_correlate(const Var& features, const Var& filters);

private:
    DfgConfig config_;
    nn::Conv1d sentence_conv_;
    nn::Linear att_words_;   // E/2 -> hidden, no bias
    nn::Linear att_image_;   // C -> E/2
    nn::Linear att_joint_;   // E/2 -> hidden, carries the hidden bias
    nn::Linear att_logit_;   // hidden -> 1, no bias
    nn::Linear filter_;
    nn::Linear readout_;
};

}  // namespace siamct::model
