// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "siamct/autograd.hpp"
#include "siamct/nn.hpp"
#include "siamct/tensor.hpp"

namespace siamct::model {

using ag::Var;

enum class HeadKind { dfg, dfg_no_att, ca, ca_ppm };

HeadKind parse_head_kind(std::string_view name);
std::string to_string(HeadKind kind);
bool is_dfg(HeadKind kind);

struct HeadInput {
    Var features;                  // {C, H, W}
    Var sentence;                  // {L, E}
    std::size_t valid_length = 0;  // non-padding rows of `sentence`
};

/// One attention matrix; rows are probability distributions.
struct AttentionMap {
    std::string block;  // "sa", "sga_self" or "sga_guided"
    std::size_t layer = 0;  // 1-based
    std::size_t head = 0;   // 1-based
    Tensor weights;
};

struct HeadOutput {
    Var score;  // {1, 1}, a probability
    std::vector<AttentionMap> attention;  // CA heads
    Tensor word_weights;                  // DFG with attention: {1, rows of H}
};

/// Common interface of the constraint prediction heads.
class Head {
public:
    virtual ~Head() = default;
    virtual HeadKind kind() const = 0;
    /// `rng` drives dropout and may be null when `training` is false.
    virtual HeadOutput forward(const HeadInput& input, bool training, std::mt19937_64* rng) const = 0;
    virtual nlohmann::json config_json() const = 0;

    nn::ParameterSet& params() { return params_; }
    const nn::ParameterSet& params() const { return params_; }

protected:
    nn::ParameterSet params_;
};

/// Builds a head from its kind and the JSON produced by config_json().
std::unique_ptr<Head> make_head(HeadKind kind, const nlohmann::json& config);

/// Full-scale and desk-scale configurations for a head kind.
nlohmann::json full_config(HeadKind kind);
nlohmann::json desk_config(HeadKind kind);

}  // namespace siamct::model
