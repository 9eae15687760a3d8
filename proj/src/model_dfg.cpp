// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/model_dfg.hpp"

#include <fmt/format.h>

#include "siamct/errors.hpp"

namespace siamct::model {

void DfgConfig::validate() const
{
    if (channels == 0 || spatial == 0 || attention_hidden == 0) {
        throw ValidationError("DFG dimensions must be positive");
    }
    if (sentence_length < 2 || sentence_length % 2 != 0 || embed_dim < 2 || embed_dim % 2 != 0) {
        throw ValidationError(fmt::format("sentence matrix {}x{} must have even, nonzero sides", sentence_length,
                                          embed_dim));
    }
}

nlohmann::json DfgConfig::to_json() const
{
    return {{"channels", channels},
            {"spatial", spatial},
            {"sentence_length", sentence_length},
            {"embed_dim", embed_dim},
            {"attention_hidden", attention_hidden},
            {"use_attention", use_attention},
            {"seed", seed}};
}

DfgConfig DfgConfig::from_json(const nlohmann::json& j)
{
    DfgConfig c;
    c.channels = j.value("channels", c.channels);
    c.spatial = j.value("spatial", c.spatial);
    c.sentence_length = j.value("sentence_length", c.sentence_length);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.attention_hidden = j.value("attention_hidden", c.attention_hidden);
    c.use_attention = j.value("use_attention", c.use_attention);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

DfgHead::DfgHead(const DfgConfig& config) : config_(config)
{
    config_.validate();
    std::mt19937_64 rng(config_.seed);
    const std::size_t e = config_.embed_dim;
    const std::size_t half = config_.word_cols();
    sentence_conv_ = nn::make_conv1d(params_, "sentence.conv", e, e, 3, 1, 1, rng);
    if (config_.use_attention) {
        att_words_ = nn::make_linear(params_, "attention.words", half, config_.attention_hidden, rng, false);
        att_image_ = nn::make_linear(params_, "attention.image", config_.channels, half, rng);
        att_joint_ = nn::make_linear(params_, "attention.joint", half, config_.attention_hidden, rng);
        att_logit_ = nn::make_linear(params_, "attention.logit", config_.attention_hidden, 1, rng, false);
    }
    filter_ = nn::make_linear(params_, "filter", config_.filter_input(), config_.channels, rng);
    readout_ = nn::make_linear(params_, "readout", config_.channels * config_.spatial * config_.spatial, 1, rng);
}

Var DfgHead::process_embeddings(const Var& sentence) const
{
    expect_shape(sentence.value(), {config_.sentence_length, config_.embed_dim}, "sentence matrix");
    Var x = ops::transpose(sentence);  // {E, L}: embedding dims are the conv channels
    x = ops::relu(sentence_conv_(x));
    x = ops::transpose(x);
    x = ops::reshape(x, {1, config_.sentence_length, config_.embed_dim});
    x = ops::max_pool2d(x, 2, 2, 2, 2);
    return ops::reshape(x, {config_.word_rows(), config_.word_cols()});
}

DfgHead::Attended DfgHead::attention_mlp(const Var& words, const Var& features) const
{
    if (!config_.use_attention) {
        throw ValidationError("this head was built without the attention MLP");
    }
    expect_shape(words.value(), {config_.word_rows(), config_.word_cols()}, "processed sentence");
    const Var g = att_image_(ops::mean_spatial(features));
    const Var hidden = ops::relu(ops::add_row(att_words_(words), att_joint_(g)));
    const Var logits = ops::transpose(att_logit_(hidden));
    Attended a;
    a.weights = ops::softmax_rows(logits);
    a.vector = ops::matmul(a.weights, words);
    return a;
}

Var DfgHead::generate_filters(const Var& v) const
{
    expect_shape(v.value(), {1, config_.filter_input()}, "filter generator input");
    return ops::tanh(filter_(v));
}

Var DfgHead::cross_correlate(const Var& features, const Var& filters)
{
    if (features.value().rank() != 3 || filters.size() != features.shape()[0]) {
        throw ShapeError(fmt::format("depth-wise correlation of {} with {} filters", shape_str(features.shape()),
                                     filters.size()));
    }
    return ops::scale_channels(features, filters);
}

HeadOutput DfgHead::forward(const HeadInput& input, bool /*training*/, std::mt19937_64* /*rng*/) const
{
    expect_shape(input.features.value(), {config_.channels, config_.spatial, config_.spatial}, "feature map");
    const Var words = process_embeddings(input.sentence);
    HeadOutput out;
    Var v;
    if (config_.use_attention) {
        auto attended = attention_mlp(words, input.features);
        v = attended.vector;
        out.word_weights = attended.weights.value();
    } else {
        v = ops::reshape(words, {1, words.size()});
    }
    const Var correlated = cross_correlate(input.features, generate_filters(v));
    out.score = ops::sigmoid(readout_(ops::reshape(correlated, {1, correlated.size()})));
    return out;
}

}  // namespace siamct::model
